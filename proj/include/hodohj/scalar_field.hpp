#pragma once

#include "hodohj/expr.hpp"
#include "hodohj/types.hpp"

#include <memory>
#include <string>

namespace hodohj {

/// A twice-differentiable real function of `dim()` variables.
class ScalarField {
 public:
  virtual ~ScalarField() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& p) const = 0;
  virtual Jet jet(const Vec& p) const = 0;
  virtual std::string describe() const = 0;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

FieldPtr make_expression_field(Expression expr);

/// Parses `source` over the variables y1..yn.
FieldPtr make_expression_field(const std::string& source, std::size_t n,
                               const std::string& prefix = "y");

FieldPtr make_zero_field(std::size_t n);

/// (alpha/2) |p|^2
FieldPtr make_quadratic_field(std::size_t n, double alpha);

/// coef * sum_a p_a^4
FieldPtr make_quartic_field(std::size_t n, double coef);

/// b.p + c
FieldPtr make_affine_field(Vec b, double c);

}  // namespace hodohj
