#include "doctest.h"

#include "hodohj/hodograph.hpp"
#include "hodohj/oracles.hpp"
#include "hodohj/solver.hpp"

#include <cmath>
#include <random>

using namespace hodohj;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ImplicitSolution sol1(FieldPtr phi) { return ImplicitSolution(HJSetup::paper_sol(1), phi); }

/// x^2 / (2 (t + 1)), the solution from g = x^2/2 with lambda = 1/2.
double parabola(double x, double t) { return x * x / (2.0 * (t + 1.0)); }

double lf_interior_error(std::size_t count) {
  const Lattice lat = Lattice::cube(1, -2, 2, count);
  const GridField g = GridField::sample(lat, [](const Vec& p) { return 0.5 * p[0] * p[0]; });
  const GridField u = lax_friedrichs_solve(g, HJSetup::paper_sol(1), 0.5);
  const auto field = make_grid_field(u);
  return compare_fields([&](const Vec& p) { return field->value(p); },
                        [](const Vec& p) { return parabola(p[0], 0.5); }, interior_half(lat))
      .linf;
}

}  // namespace

TEST_CASE("Hopf brute force examples") {
  const HopfResult free = hopf_bruteforce(sol1(make_zero_field(1)), v1(2), 1,
                                          Lattice::cube(1, -8, 8, 1025), 3, Extremum::Max);
  CHECK(free.u == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(free.y[0] == doctest::Approx(2.0).epsilon(1e-6));

  const HopfResult quartic = hopf_bruteforce(sol1(make_quartic_field(1, 0.25)), v1(0), 1,
                                             Lattice::cube(1, -2, 2, 401), 3, Extremum::Min);
  CHECK(quartic.u == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(std::abs(quartic.y[0]) == doctest::Approx(1.0).epsilon(1e-6));

  const HopfResult legendre = hopf_bruteforce(sol1(make_quadratic_field(1, -1)), v1(1), 0,
                                              Lattice::cube(1, -3, 3, 301), 3, Extremum::Max);
  CHECK(legendre.u == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(legendre.y[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Hopf brute force in two dimensions") {
  const ImplicitSolution sol(HJSetup::paper_sol(2), make_quadratic_field(2, -1));
  const Vec x = (Vec(2) << 0.7, -0.4).finished();
  const HopfResult r = hopf_bruteforce(sol, x, 0.5, Lattice::cube(2, -2, 2, 81), 4, Extremum::Max);
  CHECK(r.u == doctest::Approx(x.squaredNorm() / 3.0).epsilon(1e-10));
  CHECK_THROWS_AS(hopf_bruteforce(sol, x, 0.5, Lattice::cube(1, -2, 2, 81), 1, Extremum::Max),
                  ValidationError);
}

TEST_CASE("characteristics examples") {
  const auto g = make_expression_field("x1^2/2", 1, "x");
  const auto rays = characteristics_solve(*g, HJSetup::paper_sol(1), {v1(1)}, 1);
  REQUIRE(rays.size() == 1);
  CHECK(rays[0].x[0] == doctest::Approx(2.0));
  CHECK(rays[0].u == doctest::Approx(1.0));
  CHECK(rays[0].u == doctest::Approx(parabola(rays[0].x[0], 1)));

  const Vec b = (Vec(2) << 0.3, -1.2).finished();
  const auto affine = make_affine_field(b, 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-2, 2);
  for (const HJSetup s : {HJSetup::paper_sol(2), HJSetup::paper_eq1(2)}) {
    std::vector<Vec> starts;
    for (int k = 0; k < 10; ++k) starts.push_back((Vec(2) << d(rng), d(rng)).finished());
    for (const auto& r : characteristics_solve(*affine, s, starts, 0.8)) {
      CHECK(r.u == doctest::Approx(plane_wave_eval({s, b, 0.0}, r.x, 0.8)).epsilon(1e-14));
      CHECK((r.p - b).norm() == 0.0);
    }
  }

  const auto constant = make_affine_field(Vec::Zero(1), 3.5);
  for (const auto& r : characteristics_solve(*constant, HJSetup::paper_sol(1), {v1(-1), v1(2)}, 7)) {
    CHECK(r.u == 3.5);
    CHECK(r.x == r.x0);
  }
}

TEST_CASE("gradient is constant along characteristics") {
  const auto g = make_expression_field("x1^2/2 + 0.05*x1^4", 1, "x");
  const HJSetup s = HJSetup::paper_sol(1);
  const double t = 0.3;
  const double delta = 1e-4;
  for (double x0 = -1.0; x0 <= 1.0; x0 += 0.125) {
    const auto rays = characteristics_solve(*g, s, {v1(x0 - delta), v1(x0), v1(x0 + delta)}, t);
    const double slope = (rays[2].u - rays[0].u) / (rays[2].x[0] - rays[0].x[0]);
    CHECK(std::abs(slope - rays[1].p[0]) <= 1e-6);
  }
}

TEST_CASE("Lax-Friedrichs accuracy and convergence") {
  const double e201 = lf_interior_error(201);
  const double e401 = lf_interior_error(401);
  const double e801 = lf_interior_error(801);
  CHECK(e401 <= 0.01);
  CHECK(e201 / e401 >= 1.5);
  CHECK(e201 / e401 <= 2.5);
  CHECK(e401 / e801 >= 1.5);
  CHECK(e401 / e801 <= 2.5);
}

TEST_CASE("Lax-Friedrichs preserves constants") {
  const Lattice lat = Lattice::cube(2, -1, 1, 21);
  const GridField g = GridField::sample(lat, [](const Vec&) { return -1.25; });
  const GridField u = lax_friedrichs_solve(g, HJSetup::paper_sol(2), 2.0);
  for (double v : u.values) CHECK(v == -1.25);
}

TEST_CASE("Lax-Friedrichs is monotone") {
  // Outflow data: characteristics leave the box, so the linear ghost layer
  // carries no information inward. A shared fixed dissipation keeps the two
  // runs on the same scheme.
  const Lattice lat = Lattice::cube(1, -1, 1, 101);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> bump(0.0, 0.05);
  std::vector<double> v1s(lat.size()), v2s(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double x = lat.point(i)[0];
    v1s[i] = 0.5 * x * x;
    v2s[i] = v1s[i] + bump(rng);
  }
  LaxFriedrichsOptions opts;
  opts.sigma = {2.5};
  const GridField u1 = lax_friedrichs_solve(GridField(lat, v1s), HJSetup::paper_sol(1), 0.4, opts);
  const GridField u2 = lax_friedrichs_solve(GridField(lat, v2s), HJSetup::paper_sol(1), 0.4, opts);
  for (std::size_t i = 0; i < lat.size(); ++i) CHECK(u1.values[i] <= u2.values[i] + 1e-12);
}

TEST_CASE("Lax-Friedrichs validation and instability guard") {
  const Lattice lat = Lattice::cube(1, -1, 1, 11);
  const GridField g = GridField::sample(lat, [](const Vec& p) { return p[0]; });
  CHECK_THROWS_AS(lax_friedrichs_solve(g, HJSetup::paper_sol(1), 0.0), ValidationError);
  LaxFriedrichsOptions bad;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(lax_friedrichs_solve(g, HJSetup::paper_sol(1), 1.0, bad), ValidationError);
  CHECK_THROWS_AS(lax_friedrichs_solve(g, HJSetup::paper_sol(2), 1.0), ValidationError);

  // A dissipation far below the wave speed takes one huge step; a tight
  // guard catches the jump.
  LaxFriedrichsOptions unstable;
  unstable.sigma = {1e-3};
  unstable.growth_limit = 10.0;
  const GridField steep = GridField::sample(lat, [](const Vec& p) { return 5.0 * p[0] * p[0]; });
  CHECK_THROWS_AS(lax_friedrichs_solve(steep, HJSetup::paper_sol(1), 5.0, unstable),
                  InstabilityError);
}

TEST_CASE("compare_fields") {
  const Lattice lat = Lattice::cube(2, -1, 1, 11);
  auto f = [](const Vec& p) { return std::sin(p[0]) * p[1]; };
  const ComparisonReport same = compare_fields(f, f, lat);
  CHECK(same.linf == 0.0);
  CHECK(same.l2 == 0.0);
  CHECK(same.points_compared == lat.size());
  CHECK(same.notes.empty());

  auto shifted = [](const Vec& p) { return p[0] > 0.5 ? 3.0 : 1.0; };
  auto ones = [](const Vec&) { return 1.0; };
  const ComparisonReport diff = compare_fields(shifted, ones, std::vector<Vec>{v1(0), v1(0.8), v1(1)});
  CHECK(diff.linf == 2.0);
  CHECK(diff.l2 == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(diff.worst_point[0] == 0.8);

  auto partial = [](const Vec& p) {
    if (p[0] < 0) throw DomainError("negative");
    return 0.0;
  };
  const ComparisonReport excluded = compare_fields(partial, ones, std::vector<Vec>{v1(-1), v1(1)});
  CHECK(excluded.points_compared == 1);
  CHECK(excluded.notes.find("1 of 2") != std::string::npos);
}

TEST_CASE("Lax-Friedrichs against the closed form") {
  const Lattice lat = Lattice::cube(1, -2, 2, 401);
  const GridField g = GridField::sample(lat, [](const Vec& p) { return 0.5 * p[0] * p[0]; });
  const auto u = make_grid_field(lax_friedrichs_solve(g, HJSetup::paper_sol(1), 0.5));
  const ComparisonReport rep = compare_fields([](const Vec& p) { return parabola(p[0], 0.5); },
                                              [&](const Vec& p) { return u->value(p); },
                                              interior_half(lat));
  CHECK(rep.linf <= 0.01);
  CHECK(rep.linf > 0.0);
}

TEST_CASE("interior half lattice") {
  const Lattice half = interior_half(Lattice::cube(1, -2, 2, 401));
  CHECK(half.counts[0] == 201);
  CHECK(half.box.lower[0] == doctest::Approx(-1.0));
  CHECK(half.box.upper[0] == doctest::Approx(1.0));
}

TEST_CASE("oracle triangle with closed-form parameter function") {
  const auto g = make_expression_field("x1^2/2", 1, "x");
  const auto sol = sol1(make_quadratic_field(1, -1));
  const auto implicit = selected_evaluator(sol);
  for (double t : {0.25, 0.5}) {
    std::vector<Vec> starts;
    for (double x0 = -1.0; x0 <= 1.0; x0 += 0.1) starts.push_back(v1(x0));
    for (const auto& ray : characteristics_solve(*g, sol.setup, starts, t)) {
      const double ui = implicit(ray.x, t);
      const HopfResult h =
          hopf_bruteforce(sol, ray.x, t, Lattice::cube(1, -3, 3, 601), 4, Extremum::Max);
      CHECK(std::abs(ui - ray.u) <= 1e-6);
      CHECK(std::abs(ui - h.u) <= 1e-6);
      CHECK(std::abs(h.u - ray.u) <= 1e-6);
    }
  }
}

TEST_CASE("oracle triangle with grid parameter function") {
  // g = x^2/2 + x^4/20 has no closed-form conjugate; Phi comes from the grid.
  const auto g = make_expression_field("x1^2/2 + x1^4/20", 1, "x");
  const Lattice primal = Lattice::cube(1, -3, 3, 1201);
  const Lattice dual = Lattice::cube(1, -2.5, 2.5, 1001);
  const auto phi = make_grid_field(phi_from_initial_data(*g, primal, dual));
  const auto sol = sol1(phi);
  SolveOptions opts;
  opts.multistart_box = {v1(-2), v1(2)};
  opts.newton_tol = 1e-9;
  const auto implicit = selected_evaluator(sol, opts);
  for (double t : {0.25, 0.5}) {
    std::vector<Vec> starts;
    for (double x0 = -0.8; x0 <= 0.8; x0 += 0.2) starts.push_back(v1(x0));
    for (const auto& ray : characteristics_solve(*g, sol.setup, starts, t)) {
      const HopfResult h = hopf_bruteforce(sol, ray.x, t, dual, 4, Extremum::Max);
      CHECK(std::abs(h.u - ray.u) <= 1e-4);
      CHECK(std::abs(implicit(ray.x, t) - ray.u) <= 1e-3);
    }
  }
}
