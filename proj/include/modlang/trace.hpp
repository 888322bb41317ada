#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace modlang {

// One node per rule application in the successful derivation. rule is the
// rule number 1..11, or kBuiltinRule for a builtin application.
struct DerivationTrace {
    static constexpr int kBuiltinRule = 0;

    int rule = kBuiltinRule;
    std::string conclusion;
    std::vector<DerivationTrace> children;

    bool operator==(const DerivationTrace&) const = default;
};

// Indented text, one judgment per line, each prefixed "[rule N]"
// ("[builtin]" for builtin applications).
std::string render_trace(const DerivationTrace& t);

// {"rule": 1..11 | "builtin", "conclusion": "...", "children": [...]}
nlohmann::json trace_to_json(const DerivationTrace& t);

}  // namespace modlang
