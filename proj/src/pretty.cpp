#include "modlang/pretty.hpp"

namespace modlang {

namespace {

// Precedence tiers used for minimal parenthesization. DI binds loosest;
// function application and atoms bind tightest.
constexpr int kPrecDI = 0;
constexpr int kPrecCmp = 1;
constexpr int kPrecAdd = 2;
constexpr int kPrecMul = 3;
constexpr int kPrecAtom = 4;

int infix_prec(const std::string& head) {
    if (head == "<" || head == "<=" || head == "==") return kPrecCmp;
    if (head == "+" || head == "-") return kPrecAdd;
    if (head == "*") return kPrecMul;
    return -1;
}

std::string expr_text(const Expr& e, int min_prec);

std::string decl_text(const Decl& d, bool in_antecedent);

std::string antecedent_text(const Program& p) {
    std::string out;
    for (size_t i = 0; i < p.decls.size(); ++i) {
        if (i) out += ", ";
        out += decl_text(p.decls[i], true);
    }
    return out;
}

std::string expr_text(const Expr& e, int min_prec) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstExpr>) {
                return to_string(n.value);
            } else if constexpr (std::is_same_v<T, VarExpr>) {
                return n.name;
            } else if constexpr (std::is_same_v<T, TopExpr>) {
                return "T";
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                int p = infix_prec(n.head);
                if (p >= 0 && n.args.size() == 2) {
                    // Left-associative: the right operand needs one tier more.
                    std::string s = expr_text(n.args[0], p) + " " + n.head + " " +
                                    expr_text(n.args[1], p + 1);
                    if (p < min_prec) s = "(" + s + ")";
                    return s;
                }
                std::string s = n.head + "(";
                for (size_t i = 0; i < n.args.size(); ++i) {
                    if (i) s += ", ";
                    s += expr_text(n.args[i], kPrecDI);
                }
                return s + ")";
            } else {
                static_assert(std::is_same_v<T, DIExpr>);
                std::string s = antecedent_text(n.decls) + " -o " + expr_text(*n.body, kPrecDI);
                if (min_prec > kPrecDI) s = "(" + s + ")";
                return s;
            }
        },
        e.node);
}

std::string pattern_text(const PatternTerm& t) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstPattern>)
                return to_string(p.value);
            else if constexpr (std::is_same_v<T, VarPattern>)
                return p.name;
            else
                return p.var + "+" + p.offset.str();
        },
        t);
}

std::string head_text(const HeadPattern& h) {
    if (h.params.empty()) return h.function;
    std::string s = h.function + "(";
    for (size_t i = 0; i < h.params.size(); ++i) {
        if (i) s += ", ";
        s += pattern_text(h.params[i]);
    }
    return s + ")";
}

std::string decl_text(const Decl& d, bool in_antecedent) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ImportDecl>) {
                return "/" + n.module.name;
            } else if constexpr (std::is_same_v<T, FunDef>) {
                // Inside an antecedent a DI body is parenthesized so the
                // comma/lolli nesting stays unambiguous to the eye and the
                // parser alike.
                int body_prec = in_antecedent ? kPrecCmp : kPrecDI;
                return head_text(n.head) + " = " + expr_text(*n.body, body_prec);
            } else {
                static_assert(std::is_same_v<T, QueryDecl>);
                std::string s = "(" + n.function + "(";
                for (size_t i = 0; i < n.args.size(); ++i) {
                    if (i) s += ", ";
                    s += pattern_text(n.args[i]);
                }
                return s + ") = " + n.result_var + ")^/" + n.module.name;
            }
        },
        d);
}

}  // namespace

std::string pretty(const Expr& e) { return expr_text(e, kPrecDI); }

std::string pretty(const PatternTerm& t) { return pattern_text(t); }

std::string pretty(const HeadPattern& h) { return head_text(h); }

std::string pretty_bare(const Decl& d) { return decl_text(d, false); }

std::string pretty(const Decl& d) { return decl_text(d, false) + "."; }

std::string pretty(const Program& p) {
    std::string out;
    for (const auto& d : p.decls) {
        out += pretty(d);
        out += '\n';
    }
    return out;
}

}  // namespace modlang
