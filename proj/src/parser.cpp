#include "modlang/parser.hpp"

#include <cctype>
#include <set>

namespace modlang {

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

namespace {

enum class Tok {
    Ident, Int, True, False, Top,
    LParen, RParen, Comma, Dot, Caret, Slash,
    Eq, EqEq, Lt, Le, Plus, Minus, Star, Lolli,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    Int ival;
    SourcePos pos;
};

const char* describe(Tok k) {
    switch (k) {
        case Tok::Ident: return "identifier";
        case Tok::Int: return "integer";
        case Tok::True: return "'true'";
        case Tok::False: return "'false'";
        case Tok::Top: return "'T'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Caret: return "'^'";
        case Tok::Slash: return "'/'";
        case Tok::Eq: return "'='";
        case Tok::EqEq: return "'=='";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Lolli: return "'-o'";
        case Tok::End: return "end of input";
    }
    return "?";
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto bump = [&](size_t n) {
        for (size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto push = [&](Tok kind, SourcePos pos, std::string text) {
        out.push_back(Token{kind, std::move(text), Int(0), pos});
    };
    while (i < src.size()) {
        char c = src[i];
        SourcePos pos{line, col};
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            bump(1);
            continue;
        }
        if (c == '%') {  // comment to end of line
            while (i < src.size() && src[i] != '\n') bump(1);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            std::string word = src.substr(i, j - i);
            bump(j - i);
            if (word == "true")
                push(Tok::True, pos, word);
            else if (word == "false")
                push(Tok::False, pos, word);
            else if (word == "T")
                push(Tok::Top, pos, word);
            else
                push(Tok::Ident, pos, word);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            std::string digits = src.substr(i, j - i);
            bump(j - i);
            Token t{Tok::Int, digits, Int(digits), pos};
            out.push_back(std::move(t));
            continue;
        }
        switch (c) {
            case '(': push(Tok::LParen, pos, "("); bump(1); continue;
            case ')': push(Tok::RParen, pos, ")"); bump(1); continue;
            case ',': push(Tok::Comma, pos, ","); bump(1); continue;
            case '.': push(Tok::Dot, pos, "."); bump(1); continue;
            case '^': push(Tok::Caret, pos, "^"); bump(1); continue;
            case '/': push(Tok::Slash, pos, "/"); bump(1); continue;
            case '*': push(Tok::Star, pos, "*"); bump(1); continue;
            case '+': push(Tok::Plus, pos, "+"); bump(1); continue;
            case '=':
                if (i + 1 < src.size() && src[i + 1] == '=') {
                    push(Tok::EqEq, pos, "==");
                    bump(2);
                } else {
                    push(Tok::Eq, pos, "=");
                    bump(1);
                }
                continue;
            case '<':
                if (i + 1 < src.size() && src[i + 1] == '=') {
                    push(Tok::Le, pos, "<=");
                    bump(2);
                } else {
                    push(Tok::Lt, pos, "<");
                    bump(1);
                }
                continue;
            case '-':
                // "-o" is the implication arrow unless the o starts an
                // identifier ("-old" lexes as minus, ident).
                if (i + 1 < src.size() && src[i + 1] == 'o' &&
                    (i + 2 >= src.size() || !ident_char(src[i + 2]))) {
                    push(Tok::Lolli, pos, "-o");
                    bump(2);
                } else {
                    push(Tok::Minus, pos, "-");
                    bump(1);
                }
                continue;
            default:
                throw ParseError(pos, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back(Token{Tok::End, "", Int(0), SourcePos{line, col}});
    return out;
}

class Parser {
public:
    explicit Parser(const std::string& src) : toks_(lex(src)) {}

    Expr expr_input() {
        Expr e = di();
        expect(Tok::End, "end of input");
        return e;
    }

    Decl decl_input() {
        Decl d = decl();
        if (at(Tok::Dot)) advance();
        expect(Tok::End, "end of input");
        return d;
    }

    Program decls_input() {
        Program p;
        while (!at(Tok::End)) {
            p.decls.push_back(decl());
            expect(Tok::Dot, "'.' terminating the declaration");
        }
        return p;
    }

    std::pair<ModuleName, Program> module_input() {
        expect(Tok::Slash, "module header '/name ='");
        Token name = expect(Tok::Ident, "module name");
        expect(Tok::Eq, "'=' after the module name");
        Program p;
        while (!at(Tok::End)) {
            if (at(Tok::Slash) && peek(1).kind == Tok::Ident && peek(2).kind == Tok::Eq)
                throw DuplicateHeaderError(cur().pos,
                                           "duplicate module header '/" + peek(1).text + " ='");
            p.decls.push_back(decl());
            expect(Tok::Dot, "'.' terminating the declaration");
        }
        return {ModuleName(name.text), std::move(p)};
    }

private:
    // --- token plumbing ---

    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t n) const {
        size_t j = pos_ + n;
        return toks_[j < toks_.size() ? j : toks_.size() - 1];
    }
    void advance() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }
    bool at(Tok k) const { return cur().kind == k; }

    Token expect(Tok k, const char* what) {
        if (!at(k))
            throw ParseError(cur().pos, std::string("expected ") + what + ", got " +
                                            describe(cur().kind));
        Token t = cur();
        advance();
        return t;
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p) {
            if (++p_.depth_ > kMaxNesting)
                throw ParseError(p_.cur().pos, "expression nesting too deep");
        }
        ~DepthGuard() { --p_.depth_; }
        Parser& p_;
        static constexpr int kMaxNesting = 500;
    };

    // --- declarations ---

    Decl decl() {
        if (at(Tok::Slash)) {
            advance();
            Token id = expect(Tok::Ident, "module name after '/'");
            return ImportDecl{ModuleName(id.text)};
        }
        if (at(Tok::LParen)) return query();
        Token id = expect(Tok::Ident, "a declaration");
        HeadPattern head{id.text, {}};
        if (at(Tok::LParen)) {
            advance();
            if (!at(Tok::RParen)) {
                head.params.push_back(pattern());
                while (at(Tok::Comma)) {
                    advance();
                    head.params.push_back(pattern());
                }
            }
            expect(Tok::RParen, "')' closing the parameter list");
        }
        check_linear(head, id.pos);
        expect(Tok::Eq, "'=' in the definition");
        Expr body = di();
        return make_fundef(std::move(head), std::move(body));
    }

    void check_linear(const HeadPattern& head, SourcePos pos) {
        std::set<std::string> seen;
        for (const auto& t : head.params) {
            const std::string* name = nullptr;
            if (const auto* v = std::get_if<VarPattern>(&t)) name = &v->name;
            if (const auto* s = std::get_if<SuccPattern>(&t)) name = &s->var;
            if (name && !seen.insert(*name).second)
                throw ParseError(pos, "variable '" + *name + "' repeats in the head of '" +
                                          head.function + "'");
        }
    }

    Decl query() {
        expect(Tok::LParen, "'('");
        Token f = expect(Tok::Ident, "function name in the query");
        expect(Tok::LParen, "'(' after the queried function");
        std::vector<PatternTerm> args;
        if (!at(Tok::RParen)) {
            args.push_back(query_term());
            while (at(Tok::Comma)) {
                advance();
                args.push_back(query_term());
            }
        }
        expect(Tok::RParen, "')' closing the query arguments");
        expect(Tok::Eq, "'=' in the query");
        Token v = expect(Tok::Ident, "result variable");
        expect(Tok::RParen, "')' closing the query");
        expect(Tok::Caret, "'^' after the query");
        expect(Tok::Slash, "'/module' after '^'");
        Token m = expect(Tok::Ident, "module name");
        for (const auto& t : args)
            if (const auto* var = std::get_if<VarPattern>(&t); var && var->name == v.text)
                throw ParseError(v.pos,
                                 "result variable '" + v.text + "' occurs in the query arguments");
        return QueryDecl{f.text, std::move(args), v.text, ModuleName(m.text)};
    }

    // Query arguments are plain terms: constants or variables.
    PatternTerm query_term() {
        if (at(Tok::Minus)) {
            advance();
            Token n = expect(Tok::Int, "integer after '-'");
            return ConstPattern{Value(-n.ival)};
        }
        if (at(Tok::Int)) {
            Token n = cur();
            advance();
            return ConstPattern{Value(n.ival)};
        }
        if (at(Tok::True)) {
            advance();
            return ConstPattern{Value(true)};
        }
        if (at(Tok::False)) {
            advance();
            return ConstPattern{Value(false)};
        }
        Token id = expect(Tok::Ident, "a constant or variable");
        return VarPattern{id.text};
    }

    // Definition parameters additionally allow n+k.
    PatternTerm pattern() {
        if (at(Tok::Ident) && peek(1).kind == Tok::Plus) {
            Token id = cur();
            advance();
            advance();
            Token n = expect(Tok::Int, "integer offset in the n+k pattern");
            if (n.ival <= 0)
                throw ParseError(n.pos, "pattern offset must be positive");
            return SuccPattern{id.text, n.ival};
        }
        return query_term();
    }

    // --- expressions ---

    // di := conj_decls "-o" di | cmp. The declaration attempt commits once
    // "-o" is seen; before that, any failure backtracks to the expression
    // reading.
    Expr di() {
        DepthGuard g(*this);
        size_t save = pos_;
        std::optional<Program> antecedent;
        try {
            Program d = conj_decls();
            if (at(Tok::Lolli)) antecedent = std::move(d);
        } catch (const ParseError&) {
        }
        if (!antecedent) {
            pos_ = save;
            return cmp();
        }
        expect(Tok::Lolli, "'-o'");
        Expr body = di();
        return make_di(std::move(*antecedent), std::move(body));
    }

    Program conj_decls() {
        Program p;
        p.decls.push_back(decl());
        while (at(Tok::Comma)) {
            advance();
            p.decls.push_back(decl());
        }
        return p;
    }

    Expr cmp() {
        Expr l = add();
        while (at(Tok::Lt) || at(Tok::Le) || at(Tok::EqEq)) {
            std::string op = cur().text;
            advance();
            Expr r = add();
            l = make_call(op, {std::move(l), std::move(r)});
        }
        return l;
    }

    Expr add() {
        Expr l = mul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            std::string op = cur().text;
            advance();
            Expr r = mul();
            l = make_call(op, {std::move(l), std::move(r)});
        }
        return l;
    }

    Expr mul() {
        Expr l = primary();
        while (at(Tok::Star)) {
            advance();
            Expr r = primary();
            l = make_call("*", {std::move(l), std::move(r)});
        }
        return l;
    }

    Expr primary() {
        DepthGuard g(*this);
        switch (cur().kind) {
            case Tok::Int: {
                Token t = cur();
                advance();
                return make_const(Value(t.ival));
            }
            case Tok::Minus: {
                advance();
                Token t = expect(Tok::Int, "integer after unary '-'");
                return make_const(Value(-t.ival));
            }
            case Tok::True: advance(); return make_bool(true);
            case Tok::False: advance(); return make_bool(false);
            case Tok::Top: advance(); return make_top();
            case Tok::Ident: {
                Token id = cur();
                advance();
                if (!at(Tok::LParen)) return make_var(id.text);
                advance();
                std::vector<Expr> args;
                if (!at(Tok::RParen)) {
                    args.push_back(di());
                    while (at(Tok::Comma)) {
                        advance();
                        args.push_back(di());
                    }
                }
                expect(Tok::RParen, "')' closing the argument list");
                return make_call(id.text, std::move(args));
            }
            case Tok::LParen: {
                advance();
                Expr e = di();
                expect(Tok::RParen, "')'");
                return e;
            }
            default:
                throw ParseError(cur().pos, std::string("expected an expression, got ") +
                                                describe(cur().kind));
        }
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace

Expr parse_expr(const std::string& source) { return Parser(source).expr_input(); }

Decl parse_decl(const std::string& source) { return Parser(source).decl_input(); }

Program parse_decls(const std::string& source) { return Parser(source).decls_input(); }

std::pair<ModuleName, Program> parse_module_file(const std::string& source) {
    return Parser(source).module_input();
}

}  // namespace modlang
