#include "hodohj/scalar_field.hpp"

#include <cstdio>

namespace hodohj {

namespace {

void check_dim(const Vec& p, std::size_t n) {
  if (static_cast<std::size_t>(p.size()) != n) {
    throw ValidationError("point has " + std::to_string(p.size()) + " components, expected " +
                          std::to_string(n));
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class ExpressionField final : public ScalarField {
 public:
  explicit ExpressionField(Expression e) : expr_(std::move(e)) {}
  std::size_t dim() const override { return expr_.dim(); }
  double value(const Vec& p) const override { return expr_.evaluate(p); }
  Jet jet(const Vec& p) const override { return expr_.eval_jet(p); }
  std::string describe() const override { return expr_.source(); }

 private:
  Expression expr_;
};

class QuadraticField final : public ScalarField {
 public:
  QuadraticField(std::size_t n, double alpha) : n_(n), alpha_(alpha) {}
  std::size_t dim() const override { return n_; }
  double value(const Vec& p) const override {
    check_dim(p, n_);
    return 0.5 * alpha_ * p.squaredNorm();
  }
  Jet jet(const Vec& p) const override {
    check_dim(p, n_);
    const auto m = static_cast<Eigen::Index>(n_);
    return {0.5 * alpha_ * p.squaredNorm(), alpha_ * p, alpha_ * Mat::Identity(m, m)};
  }
  std::string describe() const override { return "quadratic(alpha=" + fmt(alpha_) + ")"; }

 private:
  std::size_t n_;
  double alpha_;
};

class QuarticField final : public ScalarField {
 public:
  QuarticField(std::size_t n, double coef) : n_(n), coef_(coef) {}
  std::size_t dim() const override { return n_; }
  double value(const Vec& p) const override {
    check_dim(p, n_);
    return coef_ * p.array().pow(4).sum();
  }
  Jet jet(const Vec& p) const override {
    check_dim(p, n_);
    Jet j;
    j.value = value(p);
    j.gradient = 4.0 * coef_ * p.array().cube().matrix();
    j.hessian = (12.0 * coef_ * p.array().square()).matrix().asDiagonal();
    return j;
  }
  std::string describe() const override { return "quartic(coef=" + fmt(coef_) + ")"; }

 private:
  std::size_t n_;
  double coef_;
};

class AffineField final : public ScalarField {
 public:
  AffineField(Vec b, double c) : b_(std::move(b)), c_(c) {}
  std::size_t dim() const override { return static_cast<std::size_t>(b_.size()); }
  double value(const Vec& p) const override {
    check_dim(p, dim());
    return b_.dot(p) + c_;
  }
  Jet jet(const Vec& p) const override {
    check_dim(p, dim());
    return {value(p), b_, Mat::Zero(b_.size(), b_.size())};
  }
  std::string describe() const override { return "affine"; }

 private:
  Vec b_;
  double c_;
};

}  // namespace

FieldPtr make_expression_field(Expression expr) {
  return std::make_shared<ExpressionField>(std::move(expr));
}

FieldPtr make_expression_field(const std::string& source, std::size_t n, const std::string& prefix) {
  return make_expression_field(Expression::parse(source, indexed_names(prefix, n)));
}

FieldPtr make_zero_field(std::size_t n) { return std::make_shared<QuadraticField>(n, 0.0); }

FieldPtr make_quadratic_field(std::size_t n, double alpha) {
  return std::make_shared<QuadraticField>(n, alpha);
}

FieldPtr make_quartic_field(std::size_t n, double coef) {
  return std::make_shared<QuarticField>(n, coef);
}

FieldPtr make_affine_field(Vec b, double c) {
  return std::make_shared<AffineField>(std::move(b), c);
}

}  // namespace hodohj
