#include "modlang/value.hpp"

namespace modlang {

std::string to_string(const Value& v) {
    if (v.is_int()) return v.as_int().str();
    if (v.is_bool()) return v.as_bool() ? "true" : "false";
    return v.as_sym().name;
}

bool value_less(const Value& a, const Value& b) {
    if (a.data.index() != b.data.index()) return a.data.index() < b.data.index();
    if (a.is_int()) return a.as_int() < b.as_int();
    if (a.is_bool()) return a.as_bool() < b.as_bool();
    return a.as_sym().name < b.as_sym().name;
}

}  // namespace modlang
