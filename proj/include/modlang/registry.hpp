#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "modlang/ast.hpp"
#include "modlang/error.hpp"

namespace modlang {

// Resolves module names to parsed Programs from a search path, caching
// results. Module m lives in m.mod; the file's header must agree with its
// name. Import cycles are detected while expanding and reported as
// CyclicImport with the offending chain.
//
// A registry is built and used within one evaluation session. Once every
// module it will ever serve has been resolved, it can be shared read-only
// across threads.
class Registry {
public:
    Registry() = default;
    explicit Registry(std::vector<std::filesystem::path> search_path)
        : search_path_(std::move(search_path)) {}

    void add_search_dir(std::filesystem::path dir) { search_path_.push_back(std::move(dir)); }
    const std::vector<std::filesystem::path>& search_path() const { return search_path_; }

    // Parses and caches <dir>/<m>.mod from the first search dir that has
    // it. Throws ModuleNotFound or HeaderMismatch. Re-resolution returns
    // the cached Program.
    const Program& resolve(const ModuleName& m);

    // Makes m resolve to p, shadowing any file of the same name. The last
    // registration wins.
    void register_inline(const ModuleName& m, Program p);

    // Eager transitive import expansion: every ImportDecl in the result is
    // replaced by the imported module's (recursively expanded) decls.
    // Throws CyclicImport on a cycle.
    Program expand(const ModuleName& m);
    Program expand(const Program& p);

    bool cached(const ModuleName& m) const { return cache_.count(m) != 0; }

private:
    Program expand_decls(const Program& p);

    std::vector<std::filesystem::path> search_path_;
    std::map<ModuleName, Program> cache_;
    std::vector<ModuleName> loading_;  // expansion chain, for cycle reports
};

}  // namespace modlang
