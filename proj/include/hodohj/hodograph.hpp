#pragma once

#include "hodohj/grid.hpp"
#include "hodohj/hjcore.hpp"
#include "hodohj/scalar_field.hpp"

namespace hodohj {

/// Image of a point under the hodograph map: y = grad u, H = x.grad u - u.
/// The time coordinate passes through unchanged.
struct HodographImage {
  Vec y;
  double H = 0.0;
};

struct InverseImage {
  Vec x;
  double u = 0.0;
};

HodographImage forward_point(const ScalarField& u, const Vec& x);

/// x = grad H(y), u = x.y - H.
InverseImage inverse_point(const ScalarField& H, const Vec& y);

/// Sampled Legendre-Fenchel conjugate g*(y) = max_i [x_i.y - g(x_i)] on the
/// dual lattice. One pass per axis, each lane in linear time via the lower
/// convex hull of the samples.
GridField conjugate_grid(const GridField& g, const Lattice& dual);

/// O(N*M) reference scan of the same maximum.
GridField conjugate_grid_direct(const GridField& g, const Lattice& dual);

/// Range of the numeric gradient of g over its box, padded by 10% per side.
Box default_dual_box(const GridField& g);

/// Phi = -g*, the parameter function whose t = 0 slice reproduces convex
/// initial data g.
GridField phi_from_initial_data(const GridField& g, const Lattice& dual);
GridField phi_from_initial_data(const ScalarField& g, const Lattice& primal, const Lattice& dual);

/// H = lambda t |y|^2 - Phi(y).
double H_general(const ImplicitSolution& sol, double t, const Vec& y);

/// dH/dt - lambda |y|^2 with dH/dt by central difference in t.
double transformed_pde_residual(const ImplicitSolution& sol, double t, const Vec& y, double h);

/// Same check for an arbitrary H(t, y).
double transformed_pde_residual(const std::function<double(double, const Vec&)>& H, double lambda,
                                double t, const Vec& y, double h);

}  // namespace hodohj
