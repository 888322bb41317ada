#pragma once

#include <string>
#include <variant>
#include <vector>

#include "modlang/ast.hpp"
#include "modlang/engine.hpp"

namespace modlang {

// One query to instantiate; source_text is kept verbatim for provenance
// comments in the emitted module.
struct QueryRequest {
    QueryDecl decl;
    std::string source_text;
};

struct WeakenRequest {
    std::vector<QueryRequest> queries;  // arguments ground after chaining
    Registry* source_registry = nullptr;
    ModuleName output_name;
};

struct ResidualFact {
    FunDef fact;  // ground head, constant body
    ModuleName source;
    std::string query_text;
};

// A module of instantiated facts: import-free, query-free, one fact per
// query. Importing it stands in for the original queries.
struct ResidualModule {
    ModuleName name;
    std::vector<ResidualFact> facts;

    Program program() const;
};

// Step one of the two-step semantics over a whole program: every query
// declaration is replaced by its instantiated fact (result variables
// substituted forward through the rest); imports and definitions pass
// through untouched.
std::variant<Program, Failure> preprocess(const EngineConfig& cfg, Registry& reg,
                                          const Program& p);

std::variant<ResidualModule, Failure> weaken_module(const WeakenRequest& req,
                                                    const EngineConfig& cfg);

// Renders a residual module as a loadable .mod file, provenance as
// comments. parse_module_file on the result yields exactly rm.program().
std::string emit(const ResidualModule& rm);

}  // namespace modlang
