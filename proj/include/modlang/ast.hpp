#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "modlang/value.hpp"

namespace modlang {

// Value-semantic heap cell; breaks the Expr/Decl recursion while keeping
// deep copies and structural equality.
template <typename T>
class Box {
public:
    Box(T v) : p_(std::make_unique<T>(std::move(v))) {}
    Box(const Box& o) : p_(std::make_unique<T>(*o.p_)) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& o) {
        p_ = std::make_unique<T>(*o.p_);
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;

    const T& operator*() const { return *p_; }
    T& operator*() { return *p_; }
    const T* operator->() const { return p_.get(); }
    T* operator->() { return p_.get(); }

    bool operator==(const Box& o) const { return *p_ == *o.p_; }

private:
    std::unique_ptr<T> p_;
};

bool is_identifier(const std::string& s);

// A module name as written after the slash: /mf has name "mf".
struct ModuleName {
    std::string name;

    explicit ModuleName(std::string n) : name(std::move(n)) {
        if (!is_identifier(name))
            throw std::invalid_argument("invalid module name: '" + name + "'");
    }

    bool operator==(const ModuleName&) const = default;
    auto operator<=>(const ModuleName&) const = default;
};

struct Expr;

// --- Head patterns -----------------------------------------------------

struct ConstPattern {
    Value value;
    bool operator==(const ConstPattern&) const = default;
};
struct VarPattern {
    std::string name;
    bool operator==(const VarPattern&) const = default;
};
// n+k: matches any integer >= k, binding var to the difference.
struct SuccPattern {
    std::string var;
    Int offset;  // >= 1
    bool operator==(const SuccPattern&) const = default;
};
using PatternTerm = std::variant<ConstPattern, VarPattern, SuccPattern>;

struct HeadPattern {
    std::string function;
    std::vector<PatternTerm> params;
    bool operator==(const HeadPattern&) const = default;
};

// --- Declarations ------------------------------------------------------

struct ImportDecl {
    ModuleName module;
    bool operator==(const ImportDecl&) const = default;
};

struct FunDef {
    HeadPattern head;
    Box<Expr> body;
    bool operator==(const FunDef&) const = default;
};

// (f(t1,...,tn) = v)^/m. The arguments must be ground by the time the
// query is instantiated; result_var never occurs among them.
struct QueryDecl {
    std::string function;
    std::vector<PatternTerm> args;  // ConstPattern or VarPattern only
    std::string result_var;
    ModuleName module;
    bool operator==(const QueryDecl&) const = default;
};

using Decl = std::variant<ImportDecl, FunDef, QueryDecl>;

// An ordered sequence of declarations. Conjunction is kept flat; order is
// exactly the order written or loaded.
struct Program {
    std::vector<Decl> decls;
    bool operator==(const Program&) const = default;
};

// --- Expressions -------------------------------------------------------

struct TopExpr {
    bool operator==(const TopExpr&) const = default;
};
struct ConstExpr {
    Value value;
    bool operator==(const ConstExpr&) const = default;
};
struct VarExpr {
    std::string name;
    bool operator==(const VarExpr&) const = default;
};
// h(E,...,E); a 0-ary call h() is distinct from the variable h.
struct CallExpr {
    std::string head;
    std::vector<Expr> args;
    bool operator==(const CallExpr&) const = default;
};
// D -o E with a non-empty antecedent.
struct DIExpr {
    Program decls;
    Box<Expr> body;
    bool operator==(const DIExpr&) const = default;
};

struct Expr {
    std::variant<ConstExpr, VarExpr, CallExpr, DIExpr, TopExpr> node;
    bool operator==(const Expr&) const = default;
};

// --- Convenience constructors (tests and builders use these heavily) ---

inline Expr make_const(Value v) { return Expr{ConstExpr{std::move(v)}}; }
inline Expr make_int(long long v) { return make_const(Value::integer(v)); }
inline Expr make_bool(bool v) { return make_const(Value::boolean(v)); }
inline Expr make_var(std::string name) { return Expr{VarExpr{std::move(name)}}; }
inline Expr make_call(std::string head, std::vector<Expr> args) {
    return Expr{CallExpr{std::move(head), std::move(args)}};
}
inline Expr make_top() { return Expr{TopExpr{}}; }
inline Expr make_di(Program decls, Expr body) {
    return Expr{DIExpr{std::move(decls), Box<Expr>(std::move(body))}};
}
inline Decl make_fundef(HeadPattern head, Expr body) {
    return FunDef{std::move(head), Box<Expr>(std::move(body))};
}
inline Decl make_import(std::string module) {
    return ImportDecl{ModuleName(std::move(module))};
}

}  // namespace modlang
