#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "modlang/ast.hpp"

namespace modlang {

struct SourcePos {
    int line = 1;
    int col = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(SourcePos pos, const std::string& msg)
        : std::runtime_error(render(pos, msg)), pos_(pos) {}

    SourcePos pos() const { return pos_; }

private:
    static std::string render(SourcePos pos, const std::string& msg) {
        return std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + msg;
    }
    SourcePos pos_;
};

// A module file declared a second `/name =` header.
class DuplicateHeaderError : public ParseError {
public:
    using ParseError::ParseError;
};

class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModuleNotFound : public RegistryError {
public:
    ModuleNotFound(const ModuleName& m, const std::vector<std::filesystem::path>& searched);
    const ModuleName& module() const { return module_; }

private:
    ModuleName module_;
};

class HeaderMismatch : public RegistryError {
public:
    HeaderMismatch(const std::filesystem::path& file, const ModuleName& expected,
                   const std::string& declared);
    const std::string& declared() const { return declared_; }

private:
    std::string declared_;
};

class CyclicImport : public RegistryError {
public:
    explicit CyclicImport(std::vector<ModuleName> chain);
    const std::vector<ModuleName>& chain() const { return chain_; }

private:
    std::vector<ModuleName> chain_;
};

}  // namespace modlang
