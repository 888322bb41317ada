#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <variant>

namespace modlang {

// Integers are arbitrary precision; arithmetic never overflows.
using Int = boost::multiprecision::cpp_int;

// An identifier constant. The only one reachable from source today is "T",
// the value of the always-succeeding expression.
struct Sym {
    std::string name;
    bool operator==(const Sym&) const = default;
};

// A ground constant produced by evaluation. Equality is structural.
struct Value {
    std::variant<Int, bool, Sym> data;

    Value() : data(Int(0)) {}
    explicit Value(Int v) : data(std::move(v)) {}
    explicit Value(bool v) : data(v) {}
    explicit Value(Sym v) : data(std::move(v)) {}

    static Value integer(long long v) { return Value(Int(v)); }
    static Value boolean(bool v) { return Value(v); }
    static Value symbol(std::string name) { return Value(Sym{std::move(name)}); }

    bool is_int() const { return std::holds_alternative<Int>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_sym() const { return std::holds_alternative<Sym>(data); }

    const Int& as_int() const { return std::get<Int>(data); }
    bool as_bool() const { return std::get<bool>(data); }
    const Sym& as_sym() const { return std::get<Sym>(data); }

    bool operator==(const Value&) const = default;
};

// Renders a value the way the concrete syntax spells it: 42, true, T.
std::string to_string(const Value& v);

// Total order, used by tests and any container that needs one.
bool value_less(const Value& a, const Value& b);

}  // namespace modlang
