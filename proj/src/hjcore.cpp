#include "hodohj/hjcore.hpp"

#include <cmath>

namespace hodohj {

HJSetup HJSetup::preset(const std::string& name, std::size_t n) {
  if (name == "paper-eq1") return paper_eq1(n);
  if (name == "paper-sol") return paper_sol(n);
  throw ValidationError("unknown convention preset \"" + name + "\"");
}

void HJSetup::validate() const {
  if (n < 1) throw ValidationError("dimension must be at least 1");
  if (lambda == 0.0 || !std::isfinite(lambda)) throw ValidationError("lambda must be nonzero");
}

ImplicitSolution::ImplicitSolution(HJSetup s, FieldPtr p) : setup(s), phi(std::move(p)) {
  setup.validate();
  if (!phi) throw ValidationError("parameter function is missing");
  if (phi->dim() != setup.n) {
    throw ValidationError("parameter function has " + std::to_string(phi->dim()) +
                          " variables, expected " + std::to_string(setup.n));
  }
}

const char* to_string(BranchResult::Status s) {
  switch (s) {
    case BranchResult::Status::Converged: return "converged";
    case BranchResult::Status::MaxIterations: return "max-iterations";
    case BranchResult::Status::SingularJacobian: return "singular-jacobian";
    case BranchResult::Status::DomainEscape: return "domain-escape";
    case BranchResult::Status::Stalled: return "stalled";
  }
  return "unknown";
}

Vec condition_residual(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y) {
  const Jet j = sol.phi->jet(y);
  return x - 2.0 * sol.setup.lambda * t * y + j.gradient;
}

Mat condition_jacobian(const ImplicitSolution& sol, double t, const Vec& y) {
  const Jet j = sol.phi->jet(y);
  const auto m = static_cast<Eigen::Index>(sol.dim());
  return j.hessian - 2.0 * sol.setup.lambda * t * Mat::Identity(m, m);
}

double u_from_y(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y) {
  return x.dot(y) - sol.setup.lambda * t * y.squaredNorm() + sol.phi->value(y);
}

bool is_singular(const Mat& j, double tol) {
  const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  return std::abs(j.determinant()) <= tol * std::pow(scale, static_cast<double>(j.rows()));
}

std::optional<Mat> hessian_u(const ImplicitSolution& sol, double t, const Vec& y, double tol) {
  const Mat m = -condition_jacobian(sol, t, y);
  if (is_singular(m, tol)) return std::nullopt;
  return m.inverse();
}

int rank_classify(const Mat& hess_u, double tol) {
  if (!(tol > 0.0)) throw ValidationError("rank tolerance must be positive");
  if (hess_u.size() == 0) return 0;
  const Eigen::JacobiSVD<Mat> svd(hess_u);
  const Vec& s = svd.singularValues();
  const double smax = s.maxCoeff();
  if (smax == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol * smax) ++r;
  }
  return r;
}

int rank_classify(const std::optional<Mat>& hess_u, double tol) {
  if (!hess_u) return -1;
  return rank_classify(*hess_u, tol);
}

double plane_wave_eval(const PlaneWaveSolution& pw, const Vec& x, double t) {
  return pw.b.dot(x) - pw.setup.lambda * pw.b.squaredNorm() * t + pw.c;
}

double pde_residual_numeric(const SpaceTimeFunction& u, const HJSetup& setup, const Vec& x,
                            double t, double h) {
  if (!(h > 0.0)) throw ValidationError("stencil step must be positive");
  auto eval = [&](const Vec& xs, double ts) {
    double v = 0.0;
    try {
      v = u(xs, ts);
    } catch (const Error& e) {
      throw StencilError(std::string("stencil evaluation failed: ") + e.what(), xs, ts);
    }
    if (!std::isfinite(v)) throw StencilError("non-finite value on stencil", xs, ts);
    return v;
  };
  const double ut = (eval(x, t + h) - eval(x, t - h)) / (2.0 * h);
  double grad2 = 0.0;
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    Vec up = x, dn = x;
    up[a] += h;
    dn[a] -= h;
    const double g = (eval(up, t) - eval(dn, t)) / (2.0 * h);
    grad2 += g * g;
  }
  return ut + setup.lambda * grad2;
}

}  // namespace hodohj
