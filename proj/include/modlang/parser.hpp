#pragma once

#include <string>
#include <utility>

#include "modlang/ast.hpp"
#include "modlang/error.hpp"

namespace modlang {

// All parse entry points either return an AST or throw ParseError with a
// line/column position; they never abort the process.

// A single expression spanning the whole input.
Expr parse_expr(const std::string& source);

// A single declaration; the trailing "." is optional here so that query
// strings like "(fib(3)=v)^/mf" can be passed verbatim.
Decl parse_decl(const std::string& source);

// A dot-terminated declaration sequence (the body of a module file, or a
// REPL line). Order is preserved verbatim.
Program parse_decls(const std::string& source);

// A module file: "/name =" header followed by declarations. Throws
// DuplicateHeaderError if a second header appears.
std::pair<ModuleName, Program> parse_module_file(const std::string& source);

}  // namespace modlang
