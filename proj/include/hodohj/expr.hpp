#pragma once

#include "hodohj/types.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hodohj {

/// Value, gradient and Hessian of a function at a point.
struct Jet {
  double value = 0.0;
  Vec gradient;
  Mat hessian;

  static Jet constant(double v, std::size_t n);
  static Jet variable(double v, std::size_t index, std::size_t n);
};

/**
 * A parsed arithmetic expression over an ordered list of real variables.
 *
 * Grammar (lowest to highest precedence):
 *
 *     expr    := term (('+' | '-') term)*
 *     term    := unary (('*' | '/') unary)*
 *     unary   := ('-' | '+') unary | power
 *     power   := primary ('^' unary)?          right associative
 *     primary := number | name | name '(' expr ')' | '(' expr ')'
 *
 * Functions: sin cos exp log sqrt abs tanh. Constants: pi e.
 *
 * Expressions are immutable; evaluation is pure and thread-safe.
 */
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view source, std::vector<std::string> variables);

  std::size_t dim() const { return variables_.size(); }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::string& source() const { return source_; }

  /// Value only. Throws DomainError / NonFiniteError.
  double evaluate(const Vec& point) const;

  /// Value, gradient and Hessian by second-order forward-mode propagation.
  Jet eval_jet(const Vec& point) const;

  /// Fully parenthesised rendering that parses back to the same function.
  std::string to_string() const;

 private:
  Expression(std::shared_ptr<const Node> root, std::vector<std::string> variables,
             std::string source);

  std::shared_ptr<const Node> root_;
  std::vector<std::string> variables_;
  std::string source_;
};

inline Expression parse(std::string_view source, std::vector<std::string> variables) {
  return Expression::parse(source, std::move(variables));
}

inline Jet eval_jet(const Expression& expr, const Vec& point) { return expr.eval_jet(point); }

/// Names y1..yn (or x1..xn with prefix "x").
std::vector<std::string> indexed_names(const std::string& prefix, std::size_t n);

}  // namespace hodohj
