#include "hodohj/hodograph.hpp"

#include <algorithm>
#include <cmath>

namespace hodohj {

HodographImage forward_point(const ScalarField& u, const Vec& x) {
  const Jet j = u.jet(x);
  return {j.gradient, x.dot(j.gradient) - j.value};
}

InverseImage inverse_point(const ScalarField& H, const Vec& y) {
  const Jet j = H.jet(y);
  return {j.gradient, j.gradient.dot(y) - j.value};
}

namespace {

/// out[j] = max_i (xs[i] * ys[j] - g[i]); xs and ys ascending.
void conjugate_lane(const std::vector<double>& xs, const std::vector<double>& g,
                    const std::vector<double>& ys, std::vector<double>& out) {
  // Lower convex hull of (xs[i], g[i]); only hull vertices can be maximisers.
  std::vector<std::size_t> hull;
  hull.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2];
      const std::size_t b = hull.back();
      // Drop b if it lies strictly above the chord a-i; collinear points stay.
      const double cross = (xs[b] - xs[a]) * (g[i] - g[a]) - (g[b] - g[a]) * (xs[i] - xs[a]);
      if (cross >= 0.0) break;
      hull.pop_back();
    }
    hull.push_back(i);
  }
  std::size_t k = 0;
  auto value = [&](std::size_t h, double y) { return xs[hull[h]] * y - g[hull[h]]; };
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const double y = ys[j];
    while (k + 1 < hull.size() && value(k + 1, y) >= value(k, y)) ++k;
    out[j] = value(k, y);
  }
}

std::vector<double> axis_coordinates(const Lattice& l, std::size_t axis) {
  std::vector<double> c(l.counts[axis]);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = l.coordinate(axis, i);
  return c;
}

void check_dual(const GridField& g, const Lattice& dual) {
  g.validate();
  if (dual.dim() != g.dim()) throw ValidationError("dual lattice dimension mismatch");
  dual.validate();
}

}  // namespace

GridField conjugate_grid(const GridField& g, const Lattice& dual) {
  check_dual(g, dual);
  const std::size_t n = g.dim();

  // Axes are eliminated from last to first. After the first pass the partial
  // result enters the next max with a plus sign, hence the negation.
  std::vector<std::size_t> shape = g.lattice.counts;
  std::vector<double> cur = g.values;
  for (std::size_t pass = 0; pass < n; ++pass) {
    const std::size_t axis = n - 1 - pass;
    if (pass > 0) {
      for (double& v : cur) v = -v;
    }
    const auto xs = axis_coordinates(g.lattice, axis);
    const auto ys = axis_coordinates(dual, axis);

    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < n; ++a) inner *= shape[a];
    const std::size_t nin = shape[axis];
    const std::size_t nout = dual.counts[axis];

    std::vector<double> next(outer * nout * inner);
    std::vector<double> lane_in(nin), lane_out(nout);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t r = 0; r < inner; ++r) {
        for (std::size_t i = 0; i < nin; ++i) lane_in[i] = cur[(o * nin + i) * inner + r];
        conjugate_lane(xs, lane_in, ys, lane_out);
        for (std::size_t j = 0; j < nout; ++j) next[(o * nout + j) * inner + r] = lane_out[j];
      }
    }
    shape[axis] = nout;
    cur = std::move(next);
  }
  return GridField(dual, std::move(cur));
}

GridField conjugate_grid_direct(const GridField& g, const Lattice& dual) {
  check_dual(g, dual);
  const auto xs = g.lattice.points();
  std::vector<double> out(dual.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const Vec y = dual.point(j);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double dot = 0.0;
      for (Eigen::Index a = 0; a < y.size(); ++a) dot += xs[i][a] * y[a];
      best = std::max(best, dot - g.values[i]);
    }
    out[j] = best;
  }
  return GridField(dual, std::move(out));
}

Box default_dual_box(const GridField& g) {
  g.validate();
  const std::size_t n = g.dim();
  const auto m = static_cast<Eigen::Index>(n);
  Vec lo = Vec::Constant(m, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(m, -std::numeric_limits<double>::infinity());
  const auto& counts = g.lattice.counts;
  for (std::size_t flat = 0; flat < g.values.size(); ++flat) {
    auto idx = g.lattice.unflatten(flat);
    for (std::size_t a = 0; a < n; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      auto up = idx, dn = idx;
      if (idx[a] + 1 < counts[a]) ++up[a];
      if (idx[a] > 0) --dn[a];
      const double dx = static_cast<double>(up[a] - dn[a]) * g.lattice.spacing(a);
      const double d = (g.at(up) - g.at(dn)) / dx;
      lo[ia] = std::min(lo[ia], d);
      hi[ia] = std::max(hi[ia], d);
    }
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    double pad = 0.1 * (hi[a] - lo[a]);
    if (pad == 0.0) pad = 0.1 * std::max(1.0, std::abs(hi[a]));
    lo[a] -= pad;
    hi[a] += pad;
  }
  return {lo, hi};
}

GridField phi_from_initial_data(const GridField& g, const Lattice& dual) {
  GridField phi = conjugate_grid(g, dual);
  for (double& v : phi.values) v = -v;
  return phi;
}

GridField phi_from_initial_data(const ScalarField& g, const Lattice& primal, const Lattice& dual) {
  if (g.dim() != primal.dim()) throw ValidationError("initial data dimension mismatch");
  return phi_from_initial_data(GridField::sample(primal, [&](const Vec& p) { return g.value(p); }),
                               dual);
}

double H_general(const ImplicitSolution& sol, double t, const Vec& y) {
  return sol.setup.lambda * t * y.squaredNorm() - sol.phi->value(y);
}

double transformed_pde_residual(const std::function<double(double, const Vec&)>& H, double lambda,
                                double t, const Vec& y, double h) {
  if (!(h > 0.0)) throw ValidationError("stencil step must be positive");
  const double dHdt = (H(t + h, y) - H(t - h, y)) / (2.0 * h);
  return dHdt - lambda * y.squaredNorm();
}

double transformed_pde_residual(const ImplicitSolution& sol, double t, const Vec& y, double h) {
  return transformed_pde_residual([&](double ts, const Vec& ys) { return H_general(sol, ts, ys); },
                                  sol.setup.lambda, t, y, h);
}

}  // namespace hodohj
