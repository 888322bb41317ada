#include "modlang/weaken.hpp"

#include <stdexcept>

#include "modlang/pretty.hpp"

namespace modlang {

Program ResidualModule::program() const {
    Program p;
    p.decls.reserve(facts.size());
    for (const auto& f : facts) p.decls.push_back(f.fact);
    return p;
}

std::variant<Program, Failure> preprocess(const EngineConfig& cfg, Registry& reg,
                                          const Program& p) {
    return process_declarations(cfg, reg, p, ImportPolicy::Keep);
}

std::variant<ResidualModule, Failure> weaken_module(const WeakenRequest& req,
                                                    const EngineConfig& cfg) {
    if (!req.source_registry) throw std::invalid_argument("weaken_module: registry not set");
    Program queries;
    queries.decls.reserve(req.queries.size());
    for (const auto& q : req.queries) queries.decls.push_back(q.decl);

    auto processed = preprocess(cfg, *req.source_registry, queries);
    if (auto* f = std::get_if<Failure>(&processed)) return std::move(*f);
    auto& facts = std::get<Program>(processed);

    // Each query instantiates to exactly one fact, in order.
    ResidualModule rm{req.output_name, {}};
    rm.facts.reserve(facts.decls.size());
    for (size_t i = 0; i < facts.decls.size(); ++i) {
        auto* fd = std::get_if<FunDef>(&facts.decls[i]);
        if (!fd) throw std::logic_error("weaken_module: query left a non-fact behind");
        std::string text = req.queries[i].source_text;
        if (text.empty()) text = pretty_bare(Decl{req.queries[i].decl});
        rm.facts.push_back(ResidualFact{*fd, req.queries[i].decl.module, std::move(text)});
    }
    return rm;
}

std::string emit(const ResidualModule& rm) {
    std::string out = "/" + rm.name.name + " =\n";
    for (const auto& f : rm.facts) {
        out += "% from /" + f.source.name + ": " + f.query_text + "\n";
        out += pretty(Decl{f.fact});
        out += '\n';
    }
    return out;
}

}  // namespace modlang
