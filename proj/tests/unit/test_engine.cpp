#include <doctest.h>

#include "modlang/engine.hpp"
#include "modlang/parser.hpp"
#include "modlang/pretty.hpp"
#include "modlang/trace.hpp"
#include "modlang/weaken.hpp"

#include "../support/conformance.hpp"
#include "../support/modgen.hpp"
#include "../support/oracle.hpp"

using namespace modlang;

namespace {

Registry fixture_registry() { return Registry({MODLANG_MODULES_DIR}); }

EvalOutcome eval_text(Registry& reg, const Program& prog, const std::string& expr,
                      EngineConfig cfg = {}) {
    return eval(cfg, reg, prog, parse_expr(expr));
}

const Failure& failure_of(const EvalOutcome& out) {
    REQUIRE(!out.ok());
    return out.failure();
}

// Walks a trace tree collecting every node satisfying pred.
template <typename Pred>
void collect(const DerivationTrace& t, Pred pred, std::vector<const DerivationTrace*>& out) {
    if (pred(t)) out.push_back(&t);
    for (const auto& c : t.children) collect(c, pred, out);
}

}  // namespace

TEST_CASE("rule 5: T always succeeds") {
    Registry reg;
    auto out = eval_text(reg, Program{}, "T");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::symbol("T"));
}

TEST_CASE("rule 6: constants evaluate to themselves") {
    Registry reg;
    CHECK(eval_text(reg, Program{}, "42").value() == Value::integer(42));
    CHECK(eval_text(reg, Program{}, "true").value() == Value::boolean(true));
}

TEST_CASE("an undefined call over the empty program has no derivation") {
    Registry reg;
    auto out = eval_text(reg, Program{}, "fib(1)");
    CHECK(failure_of(out).kind == FailureKind::NoDerivation);
    CHECK(failure_of(out).detail.find("fib(1)") != std::string::npos);
}

TEST_CASE("paper pipeline: primefib(3) is true over the shipped modules") {
    Registry reg = fixture_registry();
    Program mw = reg.resolve(ModuleName("mw"));
    auto out = eval_text(reg, mw, "primefib(3)");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::boolean(true));
}

TEST_CASE("fib(10) through an import matches the iterative oracle") {
    Registry reg = fixture_registry();
    auto out = eval_text(reg, Program{}, "/mf -o fib(10)");
    REQUIRE(out.ok());
    CHECK(out.value() == Value(oracle::fib_iter(10)));
    CHECK(out.value() == Value::integer(55));
}

TEST_CASE("backchaining selects matching clauses") {
    Registry reg = fixture_registry();
    EngineConfig cfg;

    SUBCASE("ground head") {
        Program mf = reg.expand(ModuleName("mf"));
        auto out = backchain(cfg, reg, mf, mf, GroundCall{"fib", {Value::integer(1)}});
        REQUIRE(out.ok());
        CHECK(out.value() == Value::integer(1));
    }
    SUBCASE("variable head binds the argument") {
        Program p = parse_decls("f(x) = x.");
        auto out = backchain(cfg, reg, p, p, GroundCall{"f", {Value::integer(99)}});
        REQUIRE(out.ok());
        CHECK(out.value() == Value::integer(99));
    }
    SUBCASE("second clause fires when the first does not match") {
        Program p = reg.expand(ModuleName("mf"));
        for (auto& d : parse_decls("g(1) = T. g(n) = fib(n).").decls) p.decls.push_back(d);
        auto out = backchain(cfg, reg, p, p, GroundCall{"g", {Value::integer(4)}});
        REQUIRE(out.ok());
        CHECK(out.value() == Value(oracle::fib_iter(4)));
        CHECK(out.value() == Value::integer(3));
    }
}

TEST_CASE("match_head") {
    SUBCASE("n+2 against 5 binds n to 3") {
        HeadPattern pat{"fib", {SuccPattern{"n", Int(2)}}};
        auto b = match_head(pat, GroundCall{"fib", {Value::integer(5)}});
        REQUIRE(b.has_value());
        CHECK(b->at("n") == Value::integer(3));
    }
    SUBCASE("unequal constants do not match") {
        HeadPattern pat{"fib", {ConstPattern{Value::integer(1)}}};
        CHECK(!match_head(pat, GroundCall{"fib", {Value::integer(2)}}).has_value());
    }
    SUBCASE("name and arity are checked first") {
        HeadPattern pat{"f", {VarPattern{"x"}}};
        CHECK(!match_head(pat, GroundCall{"g", {Value::integer(1)}}).has_value());
        CHECK(!match_head(pat, GroundCall{"f", {}}).has_value());
    }
    SUBCASE("mixed positions agree and substitute back") {
        HeadPattern pat{"f",
                        {VarPattern{"x"}, ConstPattern{Value::integer(0)}, SuccPattern{"y", Int(1)}}};
        GroundCall call{"f", {Value::integer(7), Value::integer(0), Value::integer(4)}};
        auto b = match_head(pat, call);
        REQUIRE(b.has_value());
        CHECK(b->at("x") == Value::integer(7));
        CHECK(b->at("y") == Value::integer(3));
        // substituting the bindings back into the pattern reproduces the call
        for (size_t i = 0; i < pat.params.size(); ++i) {
            Value v = std::visit(
                [&](const auto& p) -> Value {
                    using T = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, ConstPattern>) return p.value;
                    else if constexpr (std::is_same_v<T, VarPattern>) return b->at(p.name);
                    else return Value(Int(b->at(p.var).as_int() + p.offset));
                },
                pat.params[i]);
            CHECK(v == call.args[i]);
        }
    }
    SUBCASE("n+2 needs at least 2") {
        HeadPattern pat{"fib", {SuccPattern{"n", Int(2)}}};
        CHECK(match_head(pat, GroundCall{"fib", {Value::integer(2)}}).has_value());
        CHECK(!match_head(pat, GroundCall{"fib", {Value::integer(1)}}).has_value());
        CHECK(!match_head(pat, GroundCall{"fib", {Value::boolean(true)}}).has_value());
    }
}

TEST_CASE("substitute") {
    SUBCASE("argument passing on the fib body") {
        Expr body = parse_expr("fib(n) + fib(n + 1)");
        Expr expected = parse_expr("fib(3) + fib(3 + 1)");
        CHECK(substitute(Bindings{{"n", Value::integer(3)}}, body) == expected);
    }
    SUBCASE("empty substitution is the identity") {
        Expr e = parse_expr("/mf -o prime(fib(n))");
        CHECK(substitute(Bindings{}, e) == e);
    }
    SUBCASE("query result variable") {
        Expr e = parse_expr("prime(v)");
        CHECK(substitute(Bindings{{"v", Value::integer(2)}}, e) == parse_expr("prime(2)"));
    }
    SUBCASE("definition heads shadow within their bodies") {
        Expr e = parse_expr("g(x) = x, h(y) = x -o h(g(x))");
        Expr got = substitute(Bindings{{"x", Value::integer(5)}}, e);
        CHECK(got == parse_expr("g(x) = x, h(y) = 5 -o h(g(5))"));
    }
    SUBCASE("a query's result variable rebinds for the rest of the antecedent") {
        Expr e = parse_expr("(f(v) = x)^/m, g(y) = x -o x");
        Expr got = substitute(Bindings{{"v", Value::integer(1)}, {"x", Value::integer(9)}}, e);
        // v in the query argument is free; x after the query belongs to the query
        CHECK(got == parse_expr("(f(1) = x)^/m, g(y) = x -o x"));
    }
}

TEST_CASE("rule 9: local declarations extend the program and do not leak") {
    Registry reg;
    Program prog = parse_decls("f(0) = 1.");
    Program before = prog;
    auto out = eval_text(reg, prog, "g(y) = y + 1 -o g(f(0))");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(2));
    CHECK(prog == before);
    // the local definition is gone afterwards
    CHECK(failure_of(eval_text(reg, prog, "g(1)")).kind == FailureKind::NoDerivation);
}

TEST_CASE("nullary local definitions are reachable as 0-ary calls") {
    Registry reg;
    auto out = eval_text(reg, Program{}, "k = 5 -o k()");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(5));
}

TEST_CASE("rules 10/11: DI antecedent processing") {
    Registry reg = fixture_registry();

    SUBCASE("whole-module imports") {
        auto out = eval_text(reg, Program{}, "/mf, /mp -o prime(fib(3))");
        REQUIRE(out.ok());
        CHECK(out.value() == Value::boolean(true));
    }
    SUBCASE("queries instantiate exactly the needed facts") {
        EngineConfig cfg;
        cfg.trace_enabled = true;
        Program empty;
        auto out = eval(cfg, reg, empty,
                        parse_expr("(fib(3) = v)^/mf, (prime(v) = w)^/mp -o prime(fib(3))"));
        REQUIRE(out.ok());
        CHECK(out.value() == Value::boolean(true));
        REQUIRE(out.trace().has_value());
        std::vector<const DerivationTrace*> instantiations;
        collect(*out.trace(), [](const DerivationTrace& t) { return t.rule == 11; },
                instantiations);
        REQUIRE(instantiations.size() == 2);
        CHECK(instantiations[0]->conclusion ==
              "(fib(3) = v)^/mf => fib(3) = 2");
        CHECK(instantiations[1]->conclusion ==
              "(prime(2) = w)^/mp => prime(2) = true");
        std::vector<const DerivationTrace*> extensions;
        collect(*out.trace(), [](const DerivationTrace& t) { return t.rule == 9; }, extensions);
        REQUIRE(extensions.size() == 1);
        CHECK(extensions[0]->conclusion.find("extend {fib(3) = 2. prime(2) = true.}") == 0);
    }
    SUBCASE("the queried module answers from its own program, not the caller's") {
        Program caller = parse_decls("fib(1) = 999. fib(2) = 999. fib(n+2) = 0.");
        auto out = eval_text(reg, caller, "(fib(3) = v)^/mf -o v");
        REQUIRE(out.ok());
        CHECK(out.value() == Value::integer(2));
    }
    SUBCASE("chained queries thread the result forward") {
        auto out = eval_text(reg, Program{}, "(fib(4) = v)^/mf, (prime(v) = w)^/mp -o w");
        REQUIRE(out.ok());
        CHECK(out.value() == Value::boolean(true));  // fib(4) = 3, prime(3) = true
    }
    SUBCASE("a non-ground query argument is an error") {
        auto out = eval_text(reg, Program{}, "(fib(n) = v)^/mf -o v");
        CHECK(failure_of(out).kind == FailureKind::MQNonGround);
        CHECK(failure_of(out).detail.find("'n'") != std::string::npos);
    }
    SUBCASE("a failing query propagates as NoDerivation") {
        auto out = eval_text(reg, Program{}, "(fib(0) = v)^/mf -o v");
        CHECK(failure_of(out).kind == FailureKind::NoDerivation);
    }
}

TEST_CASE("MQ and MI forms agree on covered bodies (differential smoke)") {
    std::mt19937 rng(7781);
    EngineConfig cfg;
    for (int i = 0; i < 200; ++i) {
        auto c = modgen::gen_differential_case(rng, i);
        Registry reg;
        reg.register_inline(c.module, c.module_program);
        auto mq = eval(cfg, reg, Program{}, c.mq_expr);
        auto mi = eval(cfg, reg, Program{}, c.mi_expr);
        CAPTURE(pretty(c.mq_expr));
        REQUIRE(mq.ok());
        REQUIRE(mi.ok());
        CHECK(mq.value() == mi.value());
    }
}

TEST_CASE("builtins") {
    auto apply = [](const char* name, Value a, Value b) {
        return builtin(name, {std::move(a), std::move(b)});
    };
    CHECK(apply("+", Value::integer(2), Value::integer(3)).value == Value::integer(5));
    CHECK(apply("-", Value::integer(6), Value::integer(1)).value == Value::integer(5));
    CHECK(apply("*", Value::integer(4), Value::integer(5)).value == Value::integer(20));
    CHECK(apply("<", Value::integer(3), Value::integer(3)).value == Value::boolean(false));
    CHECK(apply("<=", Value::integer(3), Value::integer(3)).value == Value::boolean(true));
    CHECK(apply("==", Value::integer(3), Value::integer(3)).value == Value::boolean(true));
    CHECK(apply("==", Value::integer(3), Value::boolean(true)).value == Value::boolean(false));
    // floor semantics
    CHECK(apply("div", Value::integer(7), Value::integer(2)).value == Value::integer(3));
    CHECK(apply("div", Value::integer(-7), Value::integer(2)).value == Value::integer(-4));
    CHECK(apply("mod", Value::integer(-7), Value::integer(2)).value == Value::integer(1));
    CHECK(apply("mod", Value::integer(7), Value::integer(-2)).value == Value::integer(-1));
    CHECK(apply("mod", Value::integer(7), Value::integer(0)).status ==
          BuiltinResult::Status::DivisionByZero);
    CHECK(apply("+", Value::boolean(true), Value::integer(1)).status ==
          BuiltinResult::Status::TypeError);
    CHECK(builtin("+", {Value::integer(1)}).status == BuiltinResult::Status::NotBuiltin);
    CHECK(builtin("frobnicate", {}).status == BuiltinResult::Status::NotBuiltin);
}

TEST_CASE("program clauses shadow builtins of the same name") {
    Registry reg;
    Program p = parse_decls("mod(x, y) = 42.");
    auto out = eval_text(reg, p, "mod(7, 3)");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(42));
}

TEST_CASE("builtins fire only when no clause matches at all") {
    Registry reg;
    SUBCASE("non-matching clause falls through to the builtin") {
        Program p = parse_decls("mod(0, y) = 1.");
        auto out = eval_text(reg, p, "mod(7, 3)");
        REQUIRE(out.ok());
        CHECK(out.value() == Value::integer(1));
    }
    SUBCASE("a matching clause with a failing body does not") {
        Program p = parse_decls("mod(x, y) = nothing_here(x).");
        auto out = eval_text(reg, p, "mod(7, 3)");
        CHECK(failure_of(out).kind == FailureKind::NoDerivation);
    }
}

TEST_CASE("backtracking tries later clauses on NoDerivation only") {
    Registry reg;
    SUBCASE("failure backtracks") {
        EngineConfig cfg;
        cfg.clause_order = ClauseOrder::OldestFirst;
        Program p = parse_decls("g(x) = nothing_here(0). g(x) = 42.");
        auto out = eval(cfg, reg, p, parse_expr("g(1)"));
        REQUIRE(out.ok());
        CHECK(out.value() == Value::integer(42));
    }
    SUBCASE("hard errors abort the search") {
        Program p = parse_decls("h(x) = 99. h(x) = 1 + true.");  // newest first sees the bad one
        auto out = eval_text(reg, p, "h(0)");
        CHECK(failure_of(out).kind == FailureKind::TypeError);
    }
}

TEST_CASE("clause order decides between overlapping definitions") {
    Registry reg;
    Program p = parse_decls("f(0) = 1. f(0) = 2.");
    EngineConfig newest;
    EngineConfig oldest;
    oldest.clause_order = ClauseOrder::OldestFirst;
    CHECK(eval(newest, reg, p, parse_expr("f(0)")).value() == Value::integer(2));
    CHECK(eval(oldest, reg, p, parse_expr("f(0)")).value() == Value::integer(1));
}

TEST_CASE("local DI declarations shadow outer ones under NewestFirst") {
    Registry reg;
    Program p = parse_decls("f(x) = 1.");
    auto out = eval_text(reg, p, "f(x) = 2 -o f(0)");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(2));
    EngineConfig oldest;
    oldest.clause_order = ClauseOrder::OldestFirst;
    CHECK(eval(oldest, reg, p, parse_expr("f(x) = 2 -o f(0)")).value() == Value::integer(1));
}

TEST_CASE("unbound variables are reported, not derived") {
    Registry reg;
    auto out = eval_text(reg, Program{}, "n");
    CHECK(failure_of(out).kind == FailureKind::UnboundVariable);
    auto out2 = eval_text(reg, parse_decls("f(x) = x."), "f(y)");
    CHECK(failure_of(out2).kind == FailureKind::UnboundVariable);
}

TEST_CASE("the depth bound turns divergence into a failure") {
    Registry reg;
    Program p = parse_decls("loop(x) = loop(x).");
    EngineConfig cfg;
    cfg.max_depth = 100;
    auto out = eval(cfg, reg, p, parse_expr("loop(0)"));
    CHECK(failure_of(out).kind == FailureKind::DepthExceeded);
}

TEST_CASE("deep but bounded recursion succeeds at the default depth") {
    Registry reg;
    Program p = parse_decls("down(0) = 0. down(n+1) = down(n).");
    auto out = eval_text(reg, p, "down(9000)");
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(0));
}

TEST_CASE("divergence at the default depth reports DepthExceeded, not a crash") {
    Registry reg;
    Program p = parse_decls("loop(x) = loop(x).");
    auto out = eval_text(reg, p, "loop(0)");  // default max_depth = 10000
    CHECK(failure_of(out).kind == FailureKind::DepthExceeded);
}

TEST_CASE("query cycles across modules are reported") {
    Registry reg;
    reg.register_inline(ModuleName("qa"), parse_decls("(f(1) = v)^/qb.\nf(x) = v.\n"));
    reg.register_inline(ModuleName("qb"), parse_decls("(f(1) = v)^/qa.\nf(x) = v.\n"));
    auto out = eval_text(reg, Program{}, "(f(1) = r)^/qa -o r");
    CHECK(failure_of(out).kind == FailureKind::QueryCycle);
    CHECK(failure_of(out).detail.find("f(1)^/qa") != std::string::npos);
}

TEST_CASE("query chains respect the hop limit") {
    Registry reg;
    const int hops = 70;
    for (int i = 0; i < hops; ++i) {
        std::string me = "q" + std::to_string(i);
        std::string next = "q" + std::to_string(i + 1);
        reg.register_inline(ModuleName(me),
                            parse_decls("(g(1) = v)^/" + next + ".\ng(x) = v.\n"));
    }
    reg.register_inline(ModuleName("q" + std::to_string(hops)), parse_decls("g(x) = 7."));
    auto out = eval_text(reg, Program{}, "(g(1) = r)^/q0 -o r");
    CHECK(failure_of(out).kind == FailureKind::QueryDepthExceeded);
    EngineConfig roomy;
    roomy.max_query_hops = 128;
    auto ok = eval(roomy, reg, Program{}, parse_expr("(g(1) = r)^/q0 -o r"));
    REQUIRE(ok.ok());
    CHECK(ok.value() == Value::integer(7));
}

TEST_CASE("determinism: identical inputs give identical outcomes and traces") {
    Registry reg = fixture_registry();
    EngineConfig cfg;
    cfg.trace_enabled = true;
    Program mw = reg.resolve(ModuleName("mw"));
    auto a = eval(cfg, reg, mw, parse_expr("primefib(4)"));
    auto b = eval(cfg, reg, mw, parse_expr("primefib(4)"));
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value() == b.value());
    CHECK(*a.trace() == *b.trace());
    CHECK(trace_to_json(*a.trace()) == trace_to_json(*b.trace()));
}

TEST_CASE("trace shape follows the rules' premise counts") {
    Registry reg = fixture_registry();
    EngineConfig cfg;
    cfg.trace_enabled = true;
    auto out = eval(cfg, reg, Program{}, parse_expr("/mf -o fib(4) + 1"));
    REQUIRE(out.ok());
    CHECK(out.value() == Value::integer(4));
    REQUIRE(out.trace().has_value());

    std::vector<const DerivationTrace*> all;
    collect(*out.trace(), [](const DerivationTrace&) { return true; }, all);
    bool saw_rule8 = false;
    for (const auto* t : all) {
        switch (t->rule) {
            case 5:
            case 6:
            case DerivationTrace::kBuiltinRule:
                CHECK(t->children.empty());
                break;
            case 1:
            case 2:
            case 3:
            case 4:
            case 7:
            case 9:
            case 10:
            case 11:
                CHECK(t->children.size() == 1);
                break;
            case 8: {
                saw_rule8 = true;
                // n argument premises followed by the ground-call premise
                CHECK(t->children.size() >= 2);
                CHECK(t->children.back().rule == 7);
                for (size_t i = 0; i + 1 < t->children.size(); ++i) {
                    int r = t->children[i].rule;
                    bool value_form = r == 5 || r == 6 || r == 7 || r == 8 || r == 9 ||
                                      r == DerivationTrace::kBuiltinRule;
                    CHECK(value_form);
                }
                break;
            }
            default: FAIL("unexpected rule number ", t->rule);
        }
    }
    CHECK(saw_rule8);
    // the rendering prefixes every line with its rule
    std::string text = render_trace(*out.trace());
    CHECK(text.find("[rule 9]") != std::string::npos);
    CHECK(text.find("[rule 10] splice /mf") != std::string::npos);
    CHECK(text.find("[builtin]") != std::string::npos);

    auto j = trace_to_json(*out.trace());
    CHECK(j.contains("rule"));
    CHECK(j.contains("conclusion"));
    CHECK(j.contains("children"));
}

TEST_CASE("rule 8 premise count equals argument count plus one") {
    Registry reg;
    EngineConfig cfg;
    cfg.trace_enabled = true;
    Program p = parse_decls("f(x, y, z) = x.");
    auto out = eval(cfg, reg, p, parse_expr("f(1 + 1, 2, 3)"));
    REQUIRE(out.ok());
    std::vector<const DerivationTrace*> eights;
    collect(*out.trace(), [](const DerivationTrace& t) { return t.rule == 8; }, eights);
    REQUIRE(eights.size() == 1);
    CHECK(eights[0]->children.size() == 4);  // three arguments + the ground call
}

TEST_CASE("success values are ground") {
    Registry reg = fixture_registry();
    std::mt19937 rng(5150);
    EngineConfig cfg;
    cfg.max_depth = 100;
    for (int i = 0; i < 300; ++i) {
        auto c = astgen::gen_conformance_case(rng);
        auto out = eval(cfg, reg, c.program, c.expr);
        if (out.ok()) {
            CHECK((out.value().is_int() || out.value().is_bool() || out.value().is_sym()));
        }
    }
}

TEST_CASE("conformance against the derivation-search oracle (smoke)") {
    auto stats = conformance::run(500, 20240818);
    for (const auto& m : stats.mismatches) MESSAGE(m);
    CHECK(stats.mismatches.empty());
    CHECK(stats.scored >= 500);
}
