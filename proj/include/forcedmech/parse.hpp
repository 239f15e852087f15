#pragma once

#include "forcedmech/expr.hpp"

#include <map>
#include <string>

namespace fm {

// Names visible to the expression parser, each bound to the Expr it denotes.
class SymbolTable {
  public:
    void add(const std::string& name, Expr value);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Expr& at(const std::string& name) const;

  private:
    std::map<std::string, Expr> entries_;
};

// True for names claimed by the expression grammar (function names and the
// quadrature keyword); such names cannot be declared as symbols.
bool is_reserved_word(const std::string& name);

// Parse an infix expression over the declared symbols.
//
// Grammar: `+ - * /` with the usual precedence, right-associative `^` whose
// exponent must reduce to a rational constant, parentheses, decimal literals
// (converted exactly, so 0.1 is 1/10), the unary functions
// sin/cos/exp/log/sqrt/abs, the variadic norm(x1,...,xk) =
// sqrt(x1^2+...+xk^2), and quad01(u, f) integrating f over u in [0,1].
//
// `line` and `column_offset` shift reported error locations so embedded
// expressions blame their position in the enclosing file.
Expr parse_expression(const std::string& text, const SymbolTable& symbols, int line = 0,
                      int column_offset = 0);

} // namespace fm
