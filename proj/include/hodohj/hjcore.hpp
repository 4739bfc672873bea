#pragma once

#include "hodohj/scalar_field.hpp"
#include "hodohj/types.hpp"

#include <optional>
#include <string>

namespace hodohj {

/// The equation u_t + lambda |grad u|^2 = 0 in n space dimensions.
struct HJSetup {
  std::size_t n = 1;
  double lambda = 0.5;

  /// u_t - |grad u|^2 = 0 (lambda = -1).
  static HJSetup paper_eq1(std::size_t n) { return {n, -1.0}; }
  /// u_t + |grad u|^2 / 2 = 0 (lambda = 1/2), the equation the implicit
  /// solution family actually satisfies.
  static HJSetup paper_sol(std::size_t n) { return {n, 0.5}; }
  /// "paper-eq1" or "paper-sol".
  static HJSetup preset(const std::string& name, std::size_t n);

  void validate() const;
};

/// Implicit general solution parametrised by Phi(y):
///
///     u = x.y - lambda t |y|^2 + Phi(y),   x - 2 lambda t y + grad Phi(y) = 0.
struct ImplicitSolution {
  HJSetup setup;
  FieldPtr phi;

  ImplicitSolution(HJSetup s, FieldPtr p);
  std::size_t dim() const { return setup.n; }
};

/// One root y* of the implicit condition at a query point.
struct BranchResult {
  enum class Status { Converged, MaxIterations, SingularJacobian, DomainEscape, Stalled };

  Vec y;
  double u = 0.0;
  std::optional<Mat> hess_u;  ///< nullopt marks a caustic
  int rank = -1;              ///< -1 when hess_u is the singular marker
  bool converged = false;
  int iterations = 0;
  double condition_residual_norm = 0.0;
  double det_j = 0.0;  ///< det of the condition Jacobian at y
  Status status = Status::MaxIterations;
};

const char* to_string(BranchResult::Status s);

/// Rank-0 member u = b.x - lambda |b|^2 t + c.
struct PlaneWaveSolution {
  HJSetup setup;
  Vec b;
  double c = 0.0;

  /// Hessian in x, identically zero.
  Mat hessian() const { return Mat::Zero(b.size(), b.size()); }
};

inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kCausticTolerance = 1e-12;

/// F(y) = x - 2 lambda t y + grad Phi(y).
Vec condition_residual(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y);

/// dF/dy = -2 lambda t I + Hess Phi(y).
Mat condition_jacobian(const ImplicitSolution& sol, double t, const Vec& y);

/// u = x.y - lambda t |y|^2 + Phi(y). `y` need not be a root.
double u_from_y(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y);

/// |det J| <= tol * max(1, max|J_ij|)^n
bool is_singular(const Mat& j, double tol = kCausticTolerance);

/// Hess u = (2 lambda t I - Hess Phi(y))^-1 at a root y; nullopt on a caustic.
std::optional<Mat> hessian_u(const ImplicitSolution& sol, double t, const Vec& y,
                             double tol = kCausticTolerance);

/// Singular values above tol * sigma_max. Returns -1 for the singular marker.
int rank_classify(const std::optional<Mat>& hess_u, double tol = kRankTolerance);
int rank_classify(const Mat& hess_u, double tol = kRankTolerance);

double plane_wave_eval(const PlaneWaveSolution& pw, const Vec& x, double t);

/// u_t + lambda |grad u|^2 by central differences of step h on a black-box u.
/// Throws StencilError naming the failing stencil point.
double pde_residual_numeric(const SpaceTimeFunction& u, const HJSetup& setup, const Vec& x,
                            double t, double h);

}  // namespace hodohj
