// Surface syntax: S-expression reader, desugaring parser, pretty printer and
// the lexical resolver that turns variable names into environment slots.
#pragma once

#include <string>
#include <vector>

#include "cvl/expr.hpp"

namespace cvl {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& msg, int line, int col);
  int line, col;
};

struct Definition {
  std::string name;
  ExprPtr rhs;
};

struct Program {
  std::vector<Definition> defs;
  ExprPtr main;  // may be null
};

Program parse_program(const std::string& text);
// A single expression (no definitions).
ExprPtr parse_expr(const std::string& text);

std::string pretty(const Expr& e);
std::string pretty(const Program& p);

// Resolves variables in e against the given global names. Locally bound
// names shadow globals; anything else is an unbound-variable error.
ExprPtr resolve(const ExprPtr& e, const std::vector<std::string>& globals);

}  // namespace cvl
