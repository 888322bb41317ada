#include "modlang/trace.hpp"

namespace modlang {

namespace {

void render_into(const DerivationTrace& t, int indent, std::string& out) {
    out.append(static_cast<size_t>(indent) * 2, ' ');
    if (t.rule == DerivationTrace::kBuiltinRule)
        out += "[builtin] ";
    else
        out += "[rule " + std::to_string(t.rule) + "] ";
    out += t.conclusion;
    out += '\n';
    for (const auto& c : t.children) render_into(c, indent + 1, out);
}

}  // namespace

std::string render_trace(const DerivationTrace& t) {
    std::string out;
    render_into(t, 0, out);
    return out;
}

nlohmann::json trace_to_json(const DerivationTrace& t) {
    nlohmann::json j;
    if (t.rule == DerivationTrace::kBuiltinRule)
        j["rule"] = "builtin";
    else
        j["rule"] = t.rule;
    j["conclusion"] = t.conclusion;
    auto children = nlohmann::json::array();
    for (const auto& c : t.children) children.push_back(trace_to_json(c));
    j["children"] = std::move(children);
    return j;
}

}  // namespace modlang
