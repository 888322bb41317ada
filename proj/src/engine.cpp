#include "modlang/engine.hpp"

#include <algorithm>
#include <deque>
#include <exception>
#include <optional>
#include <set>

#include <pthread.h>

#include "modlang/pretty.hpp"

namespace modlang {

const char* to_string(FailureKind k) {
    switch (k) {
        case FailureKind::NoDerivation: return "NoDerivation";
        case FailureKind::DepthExceeded: return "DepthExceeded";
        case FailureKind::UnboundVariable: return "UnboundVariable";
        case FailureKind::TypeError: return "TypeError";
        case FailureKind::DivisionByZero: return "DivisionByZero";
        case FailureKind::MQNonGround: return "MQNonGround";
        case FailureKind::QueryCycle: return "QueryCycle";
        case FailureKind::QueryDepthExceeded: return "QueryDepthExceeded";
    }
    return "?";
}

// --- Matching -------------------------------------------------------------

std::optional<Bindings> match_head(const HeadPattern& pattern, const GroundCall& call) {
    if (pattern.function != call.head || pattern.params.size() != call.args.size())
        return std::nullopt;
    Bindings b;
    auto bind = [&](const std::string& name, Value v) {
        auto it = b.find(name);
        if (it != b.end()) return it->second == v;  // heads are linear; kept total anyway
        b.emplace(name, std::move(v));
        return true;
    };
    for (size_t i = 0; i < pattern.params.size(); ++i) {
        const Value& arg = call.args[i];
        bool ok = std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ConstPattern>) {
                    return p.value == arg;
                } else if constexpr (std::is_same_v<T, VarPattern>) {
                    return bind(p.name, arg);
                } else {
                    static_assert(std::is_same_v<T, SuccPattern>);
                    // n+k matches any integer >= k; the variable ranges over
                    // naturals, so it is bound to the difference.
                    if (!arg.is_int() || arg.as_int() < p.offset) return false;
                    return bind(p.var, Value(Int(arg.as_int() - p.offset)));
                }
            },
            pattern.params[i]);
        if (!ok) return std::nullopt;
    }
    return b;
}

// --- Substitution -----------------------------------------------------------

namespace {

Decl substitute_decl(const Bindings& b, const Decl& d);

// Walks a declaration sequence left to right: a query's result variable
// rebinds, so it drops out of the active substitution afterwards.
Program substitute_seq(Bindings active, const std::vector<Decl>& decls) {
    Program out;
    out.decls.reserve(decls.size());
    for (const auto& d : decls) {
        out.decls.push_back(active.empty() ? d : substitute_decl(active, d));
        if (const auto* q = std::get_if<QueryDecl>(&d)) active.erase(q->result_var);
    }
    return out;
}

Bindings minus_binders(const Bindings& b, const HeadPattern& head) {
    Bindings inner = b;
    for (const auto& t : head.params) {
        if (const auto* v = std::get_if<VarPattern>(&t)) inner.erase(v->name);
        if (const auto* s = std::get_if<SuccPattern>(&t)) inner.erase(s->var);
    }
    return inner;
}

Decl substitute_decl(const Bindings& b, const Decl& d) {
    return std::visit(
        [&](const auto& n) -> Decl {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ImportDecl>) {
                return n;
            } else if constexpr (std::is_same_v<T, FunDef>) {
                Bindings inner = minus_binders(b, n.head);
                if (inner.empty()) return n;
                return FunDef{n.head, Box<Expr>(substitute(inner, *n.body))};
            } else {
                static_assert(std::is_same_v<T, QueryDecl>);
                QueryDecl q = n;  // argument positions are free occurrences
                for (auto& t : q.args)
                    if (const auto* v = std::get_if<VarPattern>(&t))
                        if (auto it = b.find(v->name); it != b.end())
                            t = ConstPattern{it->second};
                return q;
            }
        },
        d);
}

}  // namespace

Expr substitute(const Bindings& b, const Expr& e) {
    if (b.empty()) return e;
    return std::visit(
        [&](const auto& n) -> Expr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstExpr> || std::is_same_v<T, TopExpr>) {
                return e;
            } else if constexpr (std::is_same_v<T, VarExpr>) {
                if (auto it = b.find(n.name); it != b.end()) return make_const(it->second);
                return e;
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                CallExpr out{n.head, {}};
                out.args.reserve(n.args.size());
                for (const auto& a : n.args) out.args.push_back(substitute(b, a));
                return Expr{std::move(out)};
            } else {
                static_assert(std::is_same_v<T, DIExpr>);
                Bindings active = b;
                Program decls;
                decls.decls.reserve(n.decls.decls.size());
                for (const auto& d : n.decls.decls) {
                    decls.decls.push_back(active.empty() ? d : substitute_decl(active, d));
                    if (const auto* q = std::get_if<QueryDecl>(&d)) active.erase(q->result_var);
                }
                Expr body = active.empty() ? *n.body : substitute(active, *n.body);
                return make_di(std::move(decls), std::move(body));
            }
        },
        e.node);
}

Decl substitute(const Bindings& b, const Decl& d) {
    if (b.empty()) return d;
    return substitute_decl(b, d);
}

Program substitute(const Bindings& b, const Program& p) { return substitute_seq(b, p.decls); }

// --- Builtins ---------------------------------------------------------------

BuiltinResult builtin(const std::string& name, const std::vector<Value>& args) {
    auto applied = [](Value v) {
        return BuiltinResult{BuiltinResult::Status::Applied, std::move(v), {}};
    };
    if (name == "==") {
        if (args.size() != 2) return {};
        return applied(Value(args[0] == args[1]));
    }
    static const std::set<std::string> kIntOps = {"+", "-", "*", "<", "<=", "mod", "div"};
    if (!kIntOps.count(name) || args.size() != 2) return {};
    if (!args[0].is_int() || !args[1].is_int()) {
        return BuiltinResult{BuiltinResult::Status::TypeError, Value(),
                             "builtin " + name + " expects integers, got " +
                                 to_string(args[0]) + " and " + to_string(args[1])};
    }
    const Int& a = args[0].as_int();
    const Int& n = args[1].as_int();
    if (name == "+") return applied(Value(Int(a + n)));
    if (name == "-") return applied(Value(Int(a - n)));
    if (name == "*") return applied(Value(Int(a * n)));
    if (name == "<") return applied(Value(a < n));
    if (name == "<=") return applied(Value(a <= n));
    if (n == 0) {
        return BuiltinResult{BuiltinResult::Status::DivisionByZero, Value(),
                             "builtin " + name + ": division by zero"};
    }
    // Floor semantics: mod(-7, 2) = 1, div(-7, 2) = -4.
    Int q = a / n;
    Int r = a % n;
    if (r != 0 && ((r < 0) != (n < 0))) {
        q -= 1;
        r += n;
    }
    return applied(Value(name == "div" ? q : r));
}

// --- The evaluator -----------------------------------------------------------

namespace {

std::string render_call(const GroundCall& call) {
    std::string s = call.head + "(";
    for (size_t i = 0; i < call.args.size(); ++i) {
        if (i) s += ", ";
        s += to_string(call.args[i]);
    }
    return s + ")";
}

std::string render_query(const QueryDecl& q) {
    return pretty_bare(Decl{q});
}

DerivationTrace node(int rule, std::string conclusion) {
    return DerivationTrace{rule, std::move(conclusion), {}};
}

EvalOutcome fail(FailureKind kind, std::string detail) {
    return EvalOutcome{Failure{kind, std::move(detail)}};
}

struct QueryKey {
    ModuleName module;
    std::string call;
    bool operator==(const QueryKey&) const = default;
};

// Result of processing a DI antecedent / program prefix: spliced and
// instantiated declarations plus the rule 10/11 steps in firing order.
struct ProcessedDecls {
    Program decls;
    std::optional<Expr> body;
    std::vector<DerivationTrace> steps;
};

class Evaluator {
public:
    Evaluator(const EngineConfig& cfg, Registry& reg)
        : cfg_(cfg), reg_(reg), tracing_(cfg.trace_enabled) {}

    EvalOutcome eval(const Program& prog, const Expr& e, int depth) {
        if (depth > cfg_.max_depth)
            return fail(FailureKind::DepthExceeded,
                        "derivation depth limit of " + std::to_string(cfg_.max_depth) +
                            " exceeded (recursive rule application)");
        return std::visit(
            [&](const auto& n) -> EvalOutcome {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, TopExpr>) {
                    // rule 5: T is always a success.
                    return success(Value::symbol("T"), [&] { return node(5, "T = T"); });
                } else if constexpr (std::is_same_v<T, ConstExpr>) {
                    // rule 6: a constant evaluates to itself.
                    return success(n.value, [&] {
                        auto s = to_string(n.value);
                        return node(6, s + " = " + s);
                    });
                } else if constexpr (std::is_same_v<T, VarExpr>) {
                    return fail(FailureKind::UnboundVariable,
                                "free variable '" + n.name +
                                    "' reached evaluation; no rule of Definition 1 applies");
                } else if constexpr (std::is_same_v<T, CallExpr>) {
                    return eval_call(prog, n, depth);
                } else {
                    static_assert(std::is_same_v<T, DIExpr>);
                    return eval_di(prog, n.decls, *n.body, depth);
                }
            },
            e.node);
    }

    EvalOutcome eval_call(const Program& prog, const CallExpr& call, int depth) {
        GroundCall gc{call.head, {}};
        gc.args.reserve(call.args.size());
        std::vector<DerivationTrace> arg_traces;
        bool already_ground =
            std::all_of(call.args.begin(), call.args.end(), [](const Expr& a) {
                return std::holds_alternative<ConstExpr>(a.node);
            });
        for (const auto& a : call.args) {
            if (already_ground) {
                gc.args.push_back(std::get<ConstExpr>(a.node).value);
                continue;
            }
            // rule 8: evaluate the arguments first, left to right. Constant
            // arguments contribute their trivial rule 6 derivations.
            EvalOutcome out = eval(prog, a, depth + 1);
            if (!out.ok()) return out;
            gc.args.push_back(out.value());
            if (tracing_) arg_traces.push_back(std::move(*std::get<Success>(out.result).trace));
        }
        // rule 7: switch to backchaining against a copy of the program
        // (the same immutable program serves as both).
        EvalOutcome out = backchain(prog, prog, gc, depth);
        if (!out.ok() || !tracing_) return out;
        auto& success = std::get<Success>(out.result);
        DerivationTrace seven = node(7, render_call(gc) + " = " + to_string(success.value));
        seven.children.push_back(std::move(*success.trace));
        if (!already_ground) {
            DerivationTrace eight =
                node(8, pretty(Expr{call}) + " = " + to_string(success.value));
            eight.children = std::move(arg_traces);
            eight.children.push_back(std::move(seven));
            success.trace = std::move(eight);
        } else {
            success.trace = std::move(seven);
        }
        return out;
    }

    EvalOutcome backchain(const Program& clauses, const Program& prog, const GroundCall& call,
                          int depth) {
        const size_t n = clauses.decls.size();
        bool matched_any = false;
        for (size_t k = 0; k < n; ++k) {
            size_t j = cfg_.clause_order == ClauseOrder::NewestFirst ? n - 1 - k : k;
            const auto* fd = std::get_if<FunDef>(&clauses.decls[j]);
            if (!fd) continue;
            auto bindings = match_head(fd->head, call);
            if (!bindings) continue;
            matched_any = true;
            // rule 4: argument passing, then rule 1: evaluate the body.
            Expr body = substitute(*bindings, *fd->body);
            EvalOutcome out = eval(prog, body, depth + 1);
            if (out.ok()) {
                if (tracing_) attach_clause_trace(out, clauses, j, *fd, *bindings);
                return out;
            }
            if (out.failure().kind != FailureKind::NoDerivation) return out;
            // NoDerivation: backtrack to the next matching clause.
        }
        if (!matched_any) {
            BuiltinResult br = builtin(call.head, call.args);
            switch (br.status) {
                case BuiltinResult::Status::Applied:
                    return success(br.value, [&] {
                        return node(DerivationTrace::kBuiltinRule,
                                    render_call(call) + " = " + to_string(br.value));
                    });
                case BuiltinResult::Status::TypeError:
                    return fail(FailureKind::TypeError, br.detail);
                case BuiltinResult::Status::DivisionByZero:
                    return fail(FailureKind::DivisionByZero, br.detail);
                case BuiltinResult::Status::NotBuiltin: break;
            }
        }
        return fail(FailureKind::NoDerivation,
                    "backchaining (rules 1-4): no definition derives " + render_call(call));
    }

    EvalOutcome eval_di(const Program& prog, const Program& decls, const Expr& body, int depth) {
        auto processed = process(decls, ImportPolicy::Expand, &body, depth);
        if (auto* f = std::get_if<Failure>(&processed)) return EvalOutcome{std::move(*f)};
        auto& pd = std::get<ProcessedDecls>(processed);
        // rule 9: evaluate the body against the program extended on the right.
        Program extended = prog;
        extended.decls.insert(extended.decls.end(), pd.decls.decls.begin(),
                              pd.decls.decls.end());
        EvalOutcome out = eval(extended, *pd.body, depth + 1);
        if (!out.ok() || !tracing_) return out;
        auto& success = std::get<Success>(out.result);
        std::string added;
        for (size_t i = 0; i < pd.decls.decls.size(); ++i) {
            if (i) added += " ";
            added += pretty(pd.decls.decls[i]);
        }
        DerivationTrace nine = node(9, "extend {" + added + "} |- " + pretty(*pd.body) + " = " +
                                           to_string(success.value));
        nine.children.push_back(std::move(*success.trace));
        DerivationTrace t = std::move(nine);
        for (auto it = pd.steps.rbegin(); it != pd.steps.rend(); ++it) {
            DerivationTrace outer = std::move(*it);
            outer.children.push_back(std::move(t));
            t = std::move(outer);
        }
        success.trace = std::move(t);
        return out;
    }

    // Shared by eval_di (rule 10/11 at runtime) and the weakening tool's
    // preprocess step. Processes declarations left to right; body, when
    // given, receives the forward substitutions of query result variables.
    std::variant<ProcessedDecls, Failure> process(const Program& decls, ImportPolicy policy,
                                                  const Expr* body, int depth) {
        std::deque<Decl> work(decls.decls.begin(), decls.decls.end());
        ProcessedDecls out;
        if (body) out.body = *body;
        while (!work.empty()) {
            Decl d = std::move(work.front());
            work.pop_front();
            if (const auto* imp = std::get_if<ImportDecl>(&d)) {
                if (policy == ImportPolicy::Keep) {
                    out.decls.decls.push_back(std::move(d));
                    continue;
                }
                // rule 10: splice the module's declarations in place. The
                // spliced text is processed in the same pass, so queries it
                // contains are instantiated in order.
                Program ex = reg_.expand(imp->module);
                if (tracing_)
                    out.steps.push_back(node(10, "splice /" + imp->module.name + " (" +
                                                     std::to_string(ex.decls.size()) +
                                                     " declarations)"));
                for (auto it = ex.decls.rbegin(); it != ex.decls.rend(); ++it)
                    work.push_front(std::move(*it));
                continue;
            }
            if (const auto* q = std::get_if<QueryDecl>(&d)) {
                auto outcome = instantiate_query(*q, work, out, depth);
                if (outcome) return std::move(*outcome);
                continue;
            }
            out.decls.decls.push_back(std::move(d));
        }
        return out;
    }

private:
    template <typename MakeTrace>
    EvalOutcome success(Value v, MakeTrace make_trace) {
        Success s{std::move(v), std::nullopt};
        if (tracing_) s.trace = make_trace();
        return EvalOutcome{std::move(s)};
    }

    void attach_clause_trace(EvalOutcome& out, const Program& clauses, size_t j,
                             const FunDef& fd, const Bindings& bindings) {
        auto& success = std::get<Success>(out.result);
        DerivationTrace one =
            node(1, "clause " + pretty_bare(Decl{fd}) + "; evaluate the body");
        one.children.push_back(std::move(*success.trace));
        DerivationTrace t = std::move(one);
        if (!bindings.empty()) {
            std::string bound = "bind {";
            bool first = true;
            for (const auto& [name, v] : bindings) {
                if (!first) bound += ", ";
                first = false;
                bound += name + " = " + to_string(v);
            }
            bound += "} in " + pretty(fd.head);
            DerivationTrace four = node(4, std::move(bound));
            four.children.push_back(std::move(t));
            t = std::move(four);
        }
        // Conjunction navigation: the flat program read as a right-nested
        // conjunction needs j "take right" steps to reach clause j, plus a
        // "take left" unless the clause is the final conjunct.
        const size_t n = clauses.decls.size();
        if (j < n - 1) {
            DerivationTrace two = node(2, "take the left conjunct");
            two.children.push_back(std::move(t));
            t = std::move(two);
        }
        for (size_t step = 0; step < j; ++step) {
            DerivationTrace three = node(3, "take the right conjunct");
            three.children.push_back(std::move(t));
            t = std::move(three);
        }
        success.trace = std::move(t);
    }

    // Instantiates one query declaration (rule 11): evaluates the call
    // against the queried module's fully processed program, appends the
    // resulting fact, and substitutes the result variable forward into the
    // pending declarations and the body.
    std::optional<Failure> instantiate_query(const QueryDecl& q, std::deque<Decl>& work,
                                             ProcessedDecls& out, int depth) {
        GroundCall call{q.function, {}};
        call.args.reserve(q.args.size());
        for (const auto& t : q.args) {
            if (const auto* c = std::get_if<ConstPattern>(&t)) {
                call.args.push_back(c->value);
            } else if (const auto* v = std::get_if<VarPattern>(&t)) {
                return Failure{FailureKind::MQNonGround,
                               "rule 11: query argument '" + v->name + "' is not ground in " +
                                   render_query(q)};
            } else {
                return Failure{FailureKind::MQNonGround,
                               "rule 11: n+k pattern in the arguments of " + render_query(q)};
            }
        }
        QueryKey key{q.module, render_call(call)};
        if (std::find(query_chain_.begin(), query_chain_.end(), key) != query_chain_.end()) {
            std::string chain;
            for (const auto& k : query_chain_) chain += k.call + "^/" + k.module.name + " -> ";
            chain += key.call + "^/" + key.module.name;
            return Failure{FailureKind::QueryCycle, "rule 11: query cycle: " + chain};
        }
        if (static_cast<int>(query_chain_.size()) >= cfg_.max_query_hops) {
            return Failure{FailureKind::QueryDepthExceeded,
                           "rule 11: query chain exceeds " +
                               std::to_string(cfg_.max_query_hops) + " module hops"};
        }
        query_chain_.push_back(key);
        struct Pop {
            std::vector<QueryKey>& v;
            ~Pop() { v.pop_back(); }
        } pop{query_chain_};

        // The queried module runs as an independent execution: its own
        // imports expanded and queries instantiated, evaluated from depth 0.
        // Its derivation stays out of the caller's trace; the rule 11 node
        // marks the boundary.
        const Program& raw = reg_.resolve(q.module);
        auto sub = process(raw, ImportPolicy::Expand, nullptr, depth);
        if (auto* f = std::get_if<Failure>(&sub)) return std::move(*f);
        const Program& module_prog = std::get<ProcessedDecls>(sub).decls;

        Expr call_expr = [&] {
            std::vector<Expr> args;
            args.reserve(call.args.size());
            for (const auto& v : call.args) args.push_back(make_const(v));
            return make_call(q.function, std::move(args));
        }();
        struct TraceOff {
            bool& flag;
            bool saved;
            explicit TraceOff(bool& f) : flag(f), saved(f) { f = false; }
            ~TraceOff() { flag = saved; }
        };
        EvalOutcome result = [&] {
            TraceOff off(tracing_);
            return eval(module_prog, call_expr, 0);
        }();
        if (!result.ok()) {
            Failure f = result.failure();
            f.detail = "rule 11: query " + render_query(q) + " against /" + q.module.name +
                       " failed: " + f.detail;
            return f;
        }
        const Value& w = result.value();

        HeadPattern head{q.function, {}};
        for (const auto& v : call.args) head.params.push_back(ConstPattern{v});
        FunDef fact{std::move(head), Box<Expr>(make_const(w))};
        if (tracing_)
            out.steps.push_back(
                node(11, render_query(q) + " => " + pretty_bare(Decl{fact})));
        out.decls.decls.push_back(std::move(fact));

        // Forward substitution, stopping at any later query that rebinds
        // the same result variable; the body follows the innermost binder.
        Bindings b{{q.result_var, w}};
        bool rebound = false;
        for (auto& pending : work) {
            pending = substitute_decl(b, pending);
            if (const auto* pq = std::get_if<QueryDecl>(&pending))
                if (pq->result_var == q.result_var) {
                    rebound = true;
                    break;
                }
        }
        if (!rebound && out.body) out.body = substitute(b, *out.body);
        return std::nullopt;
    }

    const EngineConfig& cfg_;
    Registry& reg_;
    bool tracing_;
    std::vector<QueryKey> query_chain_;
};

// Derivations may legally nest thousands of rule applications deep before
// the depth bound trips, far past a default 8 MiB thread stack. Public
// entry points therefore run on a worker thread with a large reserved
// stack (only touched pages are committed), so divergence surfaces as
// DepthExceeded rather than a crash.
constexpr size_t kEvalStackBytes = size_t(256) << 20;

template <typename F>
static auto on_eval_stack(F&& f) -> decltype(f()) {
    using R = decltype(f());
    struct Ctx {
        F* fn;
        std::optional<R> result;
        std::exception_ptr error;
    } ctx{&f, std::nullopt, nullptr};
    pthread_attr_t attr;
    if (pthread_attr_init(&attr) != 0) return f();
    pthread_attr_setstacksize(&attr, kEvalStackBytes);
    auto trampoline = [](void* p) -> void* {
        auto* c = static_cast<Ctx*>(p);
        try {
            c->result.emplace((*c->fn)());
        } catch (...) {
            c->error = std::current_exception();
        }
        return nullptr;
    };
    pthread_t tid;
    int rc = pthread_create(&tid, &attr, trampoline, &ctx);
    pthread_attr_destroy(&attr);
    if (rc != 0) return f();  // fall back to the caller's stack
    pthread_join(tid, nullptr);
    if (ctx.error) std::rethrow_exception(ctx.error);
    return std::move(*ctx.result);
}

}  // namespace

EvalOutcome eval(const EngineConfig& cfg, Registry& reg, const Program& program, const Expr& e) {
    return on_eval_stack([&] {
        Evaluator ev(cfg, reg);
        return ev.eval(program, e, 0);
    });
}

EvalOutcome backchain(const EngineConfig& cfg, Registry& reg, const Program& clauses,
                      const Program& program, const GroundCall& call, int depth) {
    return on_eval_stack([&] {
        Evaluator ev(cfg, reg);
        return ev.backchain(clauses, program, call, depth);
    });
}

EvalOutcome eval_di(const EngineConfig& cfg, Registry& reg, const Program& program,
                    const Program& decls, const Expr& body, int depth) {
    return on_eval_stack([&] {
        Evaluator ev(cfg, reg);
        return ev.eval_di(program, decls, body, depth);
    });
}

std::variant<Program, Failure> process_declarations(const EngineConfig& cfg, Registry& reg,
                                                    const Program& p, ImportPolicy policy) {
    return on_eval_stack([&]() -> std::variant<Program, Failure> {
        Evaluator ev(cfg, reg);
        auto r = ev.process(p, policy, nullptr, 0);
        if (auto* f = std::get_if<Failure>(&r)) return std::move(*f);
        return std::move(std::get<ProcessedDecls>(r).decls);
    });
}

}  // namespace modlang
