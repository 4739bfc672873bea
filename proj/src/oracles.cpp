#include "hodohj/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hodohj {

namespace {

/// Minimises f on [a, b] by golden-section search.
double golden_section(const std::function<double(double)>& f, double a, double b) {
  const double inv_phi = 1.0 / std::numbers::phi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

HopfResult hopf_bruteforce(const ImplicitSolution& sol, const Vec& x, double t,
                           const Lattice& ylattice, int refine_steps, Extremum policy) {
  ylattice.validate();
  if (ylattice.dim() != sol.dim()) throw ValidationError("lattice dimension mismatch");
  const double sign = policy == Extremum::Min ? 1.0 : -1.0;
  // Minimise sign * objective; points outside Phi's domain are skipped.
  auto objective = [&](const Vec& y) {
    try {
      const double v = sign * u_from_y(sol, x, t, y);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  double best = std::numeric_limits<double>::infinity();
  Vec best_y = ylattice.point(0);
  for (std::size_t i = 0; i < ylattice.size(); ++i) {
    const Vec y = ylattice.point(i);
    const double v = objective(y);
    if (v < best) {
      best = v;
      best_y = y;
    }
  }

  for (int step = 0; step < refine_steps; ++step) {
    for (std::size_t a = 0; a < sol.dim(); ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      const double h = ylattice.spacing(a);
      Vec probe = best_y;
      auto along = [&](double s) {
        probe[ia] = s;
        return objective(probe);
      };
      const double s = golden_section(along, best_y[ia] - h, best_y[ia] + h);
      probe[ia] = s;
      const double v = objective(probe);
      if (v < best) {
        best = v;
        best_y = probe;
      }
    }
  }
  return {sign * best, best_y};
}

std::vector<RaySample> characteristics_solve(const ScalarField& g, const HJSetup& setup,
                                             const std::vector<Vec>& x0, double t) {
  setup.validate();
  std::vector<RaySample> rays;
  rays.reserve(x0.size());
  for (const Vec& start : x0) {
    const Jet j = g.jet(start);
    RaySample r;
    r.x0 = start;
    r.p = j.gradient;
    r.x = start + 2.0 * setup.lambda * t * j.gradient;
    r.u = j.value + setup.lambda * t * j.gradient.squaredNorm();
    rays.push_back(std::move(r));
  }
  return rays;
}

GridField lax_friedrichs_solve(const GridField& g, const HJSetup& setup, double T,
                               const LaxFriedrichsOptions& opts) {
  g.validate();
  setup.validate();
  if (!(T > 0.0)) throw ValidationError("final time must be positive");
  if (!(opts.cfl > 0.0 && opts.cfl < 1.0)) throw ValidationError("cfl must lie in (0, 1)");
  const std::size_t n = g.dim();
  if (setup.n != n) throw ValidationError("grid dimension does not match setup");
  if (!opts.sigma.empty() && opts.sigma.size() != n) {
    throw ValidationError("dissipation needs one value per axis");
  }

  const Lattice& lat = g.lattice;
  const std::size_t total = lat.size();
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t a = n - 1; a-- > 0;) stride[a] = stride[a + 1] * lat.counts[a + 1];
  std::vector<double> h(n);
  for (std::size_t a = 0; a < n; ++a) h[a] = lat.spacing(a);

  std::vector<double> u = g.values;
  std::vector<double> next(total);
  std::vector<double> pm(total * n), pp(total * n);
  double max0 = 0.0;
  for (double v : u) max0 = std::max(max0, std::abs(v));
  const double limit = opts.growth_limit * std::max(1.0, max0);

  double time = 0.0;
  while (time < T) {
    std::vector<double> sigma(n, 0.0);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = (k / stride[a]) % lat.counts[a];
        const std::size_t last = lat.counts[a] - 1;
        double minus, plus;
        if (i == 0) {
          // ghost u_{-1} = 2 u_0 - u_1
          plus = (u[k + stride[a]] - u[k]) / h[a];
          minus = plus;
        } else if (i == last) {
          minus = (u[k] - u[k - stride[a]]) / h[a];
          plus = minus;
        } else {
          minus = (u[k] - u[k - stride[a]]) / h[a];
          plus = (u[k + stride[a]] - u[k]) / h[a];
        }
        pm[k * n + a] = minus;
        pp[k * n + a] = plus;
        sigma[a] = std::max({sigma[a], std::abs(minus), std::abs(plus)});
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      sigma[a] = opts.sigma.empty() ? 2.0 * std::abs(setup.lambda) * sigma[a] : opts.sigma[a];
    }
    double rate = 0.0;
    for (std::size_t a = 0; a < n; ++a) rate += sigma[a] / h[a];
    double dt = rate > 0.0 ? opts.cfl / rate : T - time;
    if (time + dt >= T) dt = T - time;

    for (std::size_t k = 0; k < total; ++k) {
      double ham = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const double mean = 0.5 * (pm[k * n + a] + pp[k * n + a]);
        ham += setup.lambda * mean * mean - 0.5 * sigma[a] * (pp[k * n + a] - pm[k * n + a]);
      }
      next[k] = u[k] - dt * ham;
      if (!(std::abs(next[k]) <= limit)) {
        throw InstabilityError("Lax-Friedrichs solution grew beyond the stability guard at t = " +
                               format_double(time + dt));
      }
    }
    u.swap(next);
    time += dt;
  }
  return GridField(lat, std::move(u));
}

namespace {

ComparisonReport compare_impl(const SampleSource& a, const SampleSource& b, std::size_t count,
                              const std::function<Vec(std::size_t)>& point) {
  ComparisonReport rep;
  double sum2 = 0.0;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec p = point(i);
    double va, vb;
    try {
      va = a(p);
      vb = b(p);
    } catch (const Error&) {
      ++failures;
      continue;
    }
    if (!std::isfinite(va) || !std::isfinite(vb)) {
      ++failures;
      continue;
    }
    const double d = std::abs(va - vb);
    if (rep.points_compared == 0 || d > rep.linf) {
      rep.linf = d;
      rep.worst_point = p;
    }
    sum2 += d * d;
    ++rep.points_compared;
  }
  if (rep.points_compared > 0) rep.l2 = std::sqrt(sum2 / static_cast<double>(rep.points_compared));
  if (failures > 0) {
    rep.notes = std::to_string(failures) + " of " + std::to_string(count) +
                " points failed to evaluate and were excluded";
  }
  return rep;
}

}  // namespace

ComparisonReport compare_fields(const SampleSource& a, const SampleSource& b, const Lattice& region) {
  region.validate();
  return compare_impl(a, b, region.size(), [&](std::size_t i) { return region.point(i); });
}

ComparisonReport compare_fields(const SampleSource& a, const SampleSource& b,
                                const std::vector<Vec>& points) {
  return compare_impl(a, b, points.size(), [&](std::size_t i) { return points[i]; });
}

Lattice interior_half(const Lattice& l) {
  l.validate();
  Lattice out = l;
  for (std::size_t a = 0; a < l.dim(); ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    const std::size_t cells = l.counts[a] - 1;
    const std::size_t skip = cells / 4;
    out.counts[a] = cells - 2 * skip + 1;
    out.box.lower[ia] = l.coordinate(a, skip);
    out.box.upper[ia] = l.coordinate(a, cells - skip);
  }
  return out;
}

}  // namespace hodohj
