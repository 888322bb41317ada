#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "modlang/ast.hpp"
#include "modlang/registry.hpp"
#include "modlang/trace.hpp"

namespace modlang {

// Which end of the program a backchaining scan starts from. NewestFirst
// tries the most recently added declarations first, so declarations made
// local by a DI expression shadow outer ones; OldestFirst is the literal
// left-to-right reading of the conjunction rules.
enum class ClauseOrder { NewestFirst, OldestFirst };

struct EngineConfig {
    int max_depth = 10000;  // recursion-depth bound on the derivation
    ClauseOrder clause_order = ClauseOrder::NewestFirst;
    bool trace_enabled = false;
    int max_query_hops = 64;  // bound on nested module-query chains
};

// Substitution produced by head matching: variable -> ground value.
using Bindings = std::map<std::string, Value>;

// A function call whose arguments are already evaluated.
struct GroundCall {
    std::string head;
    std::vector<Value> args;
};

enum class FailureKind {
    NoDerivation,    // search failed; backtrackable
    DepthExceeded,   // aborts, never backtracked
    UnboundVariable, // a free variable survived to evaluation
    TypeError,
    DivisionByZero,
    MQNonGround,        // query arguments not ground at instantiation time
    QueryCycle,         // same (module, call) query already in flight
    QueryDepthExceeded, // query chain longer than max_query_hops
};

const char* to_string(FailureKind k);

struct Failure {
    FailureKind kind;
    std::string detail;
};

struct Success {
    Value value;  // always ground
    std::optional<DerivationTrace> trace;
};

struct EvalOutcome {
    std::variant<Success, Failure> result;

    bool ok() const { return std::holds_alternative<Success>(result); }
    const Value& value() const { return std::get<Success>(result).value; }
    const Failure& failure() const { return std::get<Failure>(result); }
    const std::optional<DerivationTrace>& trace() const {
        return std::get<Success>(result).trace;
    }
};

// --- Matching and substitution ------------------------------------------

// Head matching against a ground call: name and arity first, then
// per-position constants compare equal, variables bind, and n+k patterns
// match any integer >= k. Total; returns nullopt on mismatch.
std::optional<Bindings> match_head(const HeadPattern& pattern, const GroundCall& call);

// Replaces free occurrences of bound variables by their values. Head
// pattern variables shadow within their definition's body; a query's
// result variable rebinds for everything after it.
Expr substitute(const Bindings& b, const Expr& e);
Decl substitute(const Bindings& b, const Decl& d);
Program substitute(const Bindings& b, const Program& p);

// --- Builtins ------------------------------------------------------------

// +, -, *, mod, div (floor semantics) on integers; <, <= on integers and
// == structurally, yielding booleans. Consulted only when no program
// clause matches the call.
struct BuiltinResult {
    enum class Status { Applied, NotBuiltin, TypeError, DivisionByZero };
    Status status = Status::NotBuiltin;
    Value value;
    std::string detail;
};
BuiltinResult builtin(const std::string& name, const std::vector<Value>& args);

// --- Evaluation ------------------------------------------------------------

// Evaluates e against program per the eval/backchain rules. Distinct calls
// over a fully loaded registry are independent and may run on separate
// threads; a single evaluation is sequential.
EvalOutcome eval(const EngineConfig& cfg, Registry& reg, const Program& program, const Expr& e);

// The backchaining phase for one ground call: scans clauses in the
// configured order, binds the first matching head, evaluates the body
// against program, and backtracks across clauses on NoDerivation.
EvalOutcome backchain(const EngineConfig& cfg, Registry& reg, const Program& clauses,
                      const Program& program, const GroundCall& call, int depth = 0);

// Evaluates `decls -o body`: imports spliced, queries instantiated left to
// right, then body evaluated against program extended with the processed
// declarations.
EvalOutcome eval_di(const EngineConfig& cfg, Registry& reg, const Program& program,
                    const Program& decls, const Expr& body, int depth = 0);

// Left-to-right declaration processing shared with the weakening tool:
// module queries are instantiated into facts (their result variables
// substituted forward); imports are spliced when policy is Expand and kept
// verbatim when policy is Keep.
enum class ImportPolicy { Expand, Keep };
std::variant<Program, Failure> process_declarations(const EngineConfig& cfg, Registry& reg,
                                                    const Program& p, ImportPolicy policy);

}  // namespace modlang
