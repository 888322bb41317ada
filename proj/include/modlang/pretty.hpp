#pragma once

#include <string>

#include "modlang/ast.hpp"

namespace modlang {

// Pretty-printing round-trips: parsing the output yields a structurally
// identical AST. Declarations get their terminating dot; inside a DI
// antecedent they are printed bare and comma-separated.

std::string pretty(const Expr& e);
std::string pretty(const PatternTerm& t);
std::string pretty(const HeadPattern& h);
std::string pretty(const Decl& d);        // includes the trailing "."
std::string pretty_bare(const Decl& d);   // no trailing "."
std::string pretty(const Program& p);     // one declaration per line

}  // namespace modlang
