#include "modlang/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "modlang/parser.hpp"

namespace modlang {

ModuleNotFound::ModuleNotFound(const ModuleName& m,
                               const std::vector<std::filesystem::path>& searched)
    : RegistryError([&] {
          std::string msg = "module '" + m.name + "' not found; searched:";
          if (searched.empty()) msg += " (empty search path)";
          for (const auto& p : searched) msg += " " + p.string();
          return msg;
      }()),
      module_(m) {}

HeaderMismatch::HeaderMismatch(const std::filesystem::path& file, const ModuleName& expected,
                               const std::string& declared)
    : RegistryError("module file " + file.string() + " declares '/" + declared +
                    "' but was resolved as '" + expected.name + "'"),
      declared_(declared) {}

CyclicImport::CyclicImport(std::vector<ModuleName> chain)
    : RegistryError([&] {
          std::string msg = "cyclic import:";
          for (size_t i = 0; i < chain.size(); ++i)
              msg += (i ? " -> /" : " /") + chain[i].name;
          return msg;
      }()),
      chain_(std::move(chain)) {}

const Program& Registry::resolve(const ModuleName& m) {
    if (auto it = cache_.find(m); it != cache_.end()) return it->second;
    for (const auto& dir : search_path_) {
        std::filesystem::path file = dir / (m.name + ".mod");
        std::error_code ec;
        if (!std::filesystem::exists(file, ec)) continue;
        std::ifstream in(file);
        if (!in) throw RegistryError("cannot read module file " + file.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            auto [declared, program] = parse_module_file(buf.str());
            if (!(declared == m)) throw HeaderMismatch(file, m, declared.name);
            return cache_.emplace(m, std::move(program)).first->second;
        } catch (const ParseError& e) {
            throw RegistryError("module file " + file.string() + ": " + e.what());
        }
    }
    throw ModuleNotFound(m, search_path_);
}

void Registry::register_inline(const ModuleName& m, Program p) {
    cache_[m] = std::move(p);  // last registration wins
}

Program Registry::expand(const ModuleName& m) {
    if (std::find(loading_.begin(), loading_.end(), m) != loading_.end()) {
        std::vector<ModuleName> chain = loading_;
        chain.push_back(m);
        loading_.clear();
        throw CyclicImport(std::move(chain));
    }
    loading_.push_back(m);
    struct Pop {
        std::vector<ModuleName>& v;
        ~Pop() {
            if (!v.empty()) v.pop_back();
        }
    } pop{loading_};
    return expand_decls(resolve(m));
}

Program Registry::expand(const Program& p) { return expand_decls(p); }

Program Registry::expand_decls(const Program& p) {
    Program out;
    for (const auto& d : p.decls) {
        if (const auto* imp = std::get_if<ImportDecl>(&d)) {
            Program ex = expand(imp->module);
            for (auto& sub : ex.decls) out.decls.push_back(std::move(sub));
        } else {
            out.decls.push_back(d);
        }
    }
    return out;
}

}  // namespace modlang
