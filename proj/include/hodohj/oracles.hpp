#pragma once

#include "hodohj/grid.hpp"
#include "hodohj/hjcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hodohj {

enum class Extremum { Min, Max };

struct HopfResult {
  double u = 0.0;
  Vec y;
};

/// Extremises x.y - lambda t |y|^2 + Phi(y) over a y lattice, then refines
/// the lattice optimum by golden-section coordinate sweeps within one cell.
HopfResult hopf_bruteforce(const ImplicitSolution& sol, const Vec& x, double t,
                           const Lattice& ylattice, int refine_steps, Extremum policy);

struct RaySample {
  Vec x0;
  Vec x;
  double u = 0.0;
  Vec p;  ///< grad g(x0), constant along the ray
};

/// Straight characteristics of u_t + lambda |grad u|^2 = 0 from u(., 0) = g:
/// x = x0 + 2 lambda t p, u = g(x0) + lambda t |p|^2.
std::vector<RaySample> characteristics_solve(const ScalarField& g, const HJSetup& setup,
                                             const std::vector<Vec>& x0, double t);

struct LaxFriedrichsOptions {
  double cfl = 0.4;
  /// Fixed dissipation per axis. When empty it is recomputed every step as
  /// 2|lambda| max|p_a| over all one-sided differences.
  std::vector<double> sigma;
  double growth_limit = 1e6;
};

/// First-order monotone scheme with the global Lax-Friedrichs numerical
/// Hamiltonian, one ghost layer by linear extrapolation.
GridField lax_friedrichs_solve(const GridField& g, const HJSetup& setup, double T,
                               const LaxFriedrichsOptions& opts = {});

struct ComparisonReport {
  double linf = 0.0;
  double l2 = 0.0;  ///< root mean square
  std::size_t points_compared = 0;
  Vec worst_point;
  std::string notes;
};

ComparisonReport compare_fields(const SampleSource& a, const SampleSource& b, const Lattice& region);
ComparisonReport compare_fields(const SampleSource& a, const SampleSource& b,
                                const std::vector<Vec>& points);

/// Lattice covering the middle half of `l` on every axis with the same node spacing.
Lattice interior_half(const Lattice& l);

}  // namespace hodohj
