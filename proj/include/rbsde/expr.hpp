#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rbsde/errors.hpp"

namespace rbsde {

// Small arithmetic expression language for drivers, terminal conditions and
// obstacles. Grammar: + - * / ^ over numbers, identifiers and the calls
// abs, exp, sq, tanh, min, max. Identifiers are free names bound at
// evaluation time (t, y, z for drivers; t, m, w for node expressions;
// anything else resolves against named coefficient processes).
class Expr {
  public:
    enum class Kind { number, identifier, unary_minus, add, sub, mul, div, pow, call };

    Kind kind;
    double value = 0.0;          // number
    std::string name;            // identifier or call name
    std::vector<std::shared_ptr<const Expr>> args;
};

using ExprPtr = std::shared_ptr<const Expr>;

// Name -> value binding for evaluation. Throws Error(parse) for unbound
// names so misconfigured scenarios fail loudly.
using Bindings = std::function<double(const std::string&)>;

// Parse or throw Error(ErrorKind::parse) with a 1-based column position.
ExprPtr parse_expr(const std::string& text);

// Stable round trip: parse(print(e)) has the same structure as e.
std::string print_expr(const ExprPtr& e);

double eval_expr(const ExprPtr& e, const Bindings& bind);

// Free identifiers of an expression, sorted and deduplicated.
std::vector<std::string> free_identifiers(const ExprPtr& e);

}  // namespace rbsde
