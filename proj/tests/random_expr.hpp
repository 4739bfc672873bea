#pragma once

// Random smooth expressions and a finite-difference oracle for the
// forward-mode derivatives. Shared by the unit and acceptance suites.

#include "hodohj/expr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace testing {

inline std::string random_expression(std::mt19937_64& rng, std::size_t n, int depth = 3) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<std::size_t> var(1, n);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  auto leaf = [&]() -> std::string {
    if (pick(rng) < 7) return "y" + std::to_string(var(rng));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", coef(rng));
    return std::string("(") + buf + ")";
  };
  if (depth == 0) return leaf();
  const std::string a = random_expression(rng, n, depth - 1);
  const std::string b = random_expression(rng, n, depth - 1);
  // Every form is real-analytic on all of R^n, so no domain errors.
  switch (pick(rng)) {
    case 0: return "(" + a + " + " + b + ")";
    case 1: return "(" + a + " - " + b + ")";
    case 2: return "(" + a + ") * (" + b + ")";
    case 3: return "(" + a + ") / (2 + cos(" + b + "))";
    case 4: return "sin(" + a + ")";
    case 5: return "exp(tanh(" + a + "))";
    case 6: return "log(1 + (" + a + ")^2)";
    case 7: return "sqrt(2 + sin(" + a + "))";
    case 8: return "(" + a + ")^3 - " + leaf();
    default: return "tanh(" + a + ") * " + leaf();
  }
}

inline hodohj::Vec random_point(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  hodohj::Vec p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = d(rng);
  return p;
}

struct DerivativeCheck {
  double gradient_error = 0.0;
  double hessian_error = 0.0;
};

/// Gradient: central differences of the value. Hessian: central differences
/// of the gradient. Errors are |ad - fd| / max(1, |fd|), worst entry.
inline DerivativeCheck check_against_differences(const hodohj::Expression& e, const hodohj::Vec& p,
                                                 double h = 1e-5) {
  const hodohj::Jet jet = e.eval_jet(p);
  DerivativeCheck out;
  const auto n = p.size();
  for (Eigen::Index a = 0; a < n; ++a) {
    hodohj::Vec up = p, dn = p;
    up[a] += h;
    dn[a] -= h;
    const double fd = (e.evaluate(up) - e.evaluate(dn)) / (2.0 * h);
    out.gradient_error =
        std::max(out.gradient_error, std::abs(jet.gradient[a] - fd) / std::max(1.0, std::abs(fd)));
    const hodohj::Vec gfd = (e.eval_jet(up).gradient - e.eval_jet(dn).gradient) / (2.0 * h);
    for (Eigen::Index b = 0; b < n; ++b) {
      out.hessian_error = std::max(
          out.hessian_error, std::abs(jet.hessian(b, a) - gfd[b]) / std::max(1.0, std::abs(gfd[b])));
    }
  }
  return out;
}

}  // namespace testing
