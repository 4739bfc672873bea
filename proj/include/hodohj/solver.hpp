#pragma once

#include "hodohj/grid.hpp"
#include "hodohj/hjcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hodohj {

enum class BranchPolicy { All, MinU, MaxU };

BranchPolicy parse_branch_policy(const std::string& name);
const char* to_string(BranchPolicy p);

struct SolveOptions {
  double newton_tol = 1e-10;
  int max_iter = 50;
  double damping = 0.5;   ///< backtracking factor
  double min_step = 1e-6;
  Box multistart_box;     ///< empty bounds mean [-2, 2]^n
  std::size_t multistart_count = 7;
  double dedup_tol = 1e-6;
  BranchPolicy branch_policy = BranchPolicy::MinU;

  void validate() const;
  Box seed_box(std::size_t n) const;
};

/// Damped Newton on the implicit condition starting from y0.
BranchResult newton_solve(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y0,
                          const SolveOptions& opts = {});

/// All roots found at one query point, deduplicated by y-distance and
/// sorted by u (ties by lexicographic y).
struct BranchSet {
  Vec x;
  double t = 0.0;
  std::vector<BranchResult> branches;
  std::size_t seeds_tried = 0;
  /// Non-converged attempt with the smallest residual; set when no seed converged.
  std::optional<BranchResult> best_failure;

  bool empty() const { return branches.empty(); }
};

/// Newton from every seed of the multistart lattice (after `extra_seeds`).
BranchSet multistart_branches(const ImplicitSolution& sol, const Vec& x, double t,
                              const SolveOptions& opts = {},
                              const std::vector<Vec>& extra_seeds = {});

/// Extremal branch under min-u / max-u. Throws on an empty set or policy All.
const BranchResult& select_branch(const BranchSet& set, BranchPolicy policy);

/// u(x', t') on the branch continued from `seed` by Newton. Throws DomainError
/// if the continuation does not converge.
SpaceTimeFunction branch_evaluator(const ImplicitSolution& sol, Vec seed,
                                   const SolveOptions& opts = {});

/// u(x, t) from multistart + branch selection. Throws DomainError when no
/// branch is found.
SpaceTimeFunction selected_evaluator(const ImplicitSolution& sol, const SolveOptions& opts = {});

struct SweepPoint {
  Vec x;
  double t = 0.0;
  BranchSet set;
  std::optional<std::size_t> selected;  ///< index into set.branches
  double det_j = 0.0;
  bool singular = false;  ///< |det J| below the caustic threshold here
  bool caustic = false;
  std::string error;

  std::size_t branch_count() const { return set.branches.size(); }
  int rank() const;
};

struct SweepResult {
  Lattice lattice;
  std::vector<double> times;
  std::vector<SweepPoint> points;  ///< time-major, then lattice row-major

  const SweepPoint& at(std::size_t time_index, std::size_t flat) const {
    return points[time_index * lattice.size() + flat];
  }
};

/// Branch sets over a space lattice for each time. Each lattice row (last
/// axis) is warm-started point to point; rows run in parallel. A point is
/// flagged as caustic when |det J| vanishes there, or when the branch count
/// or the sign of det J on the selected branch changes relative to its
/// previous neighbour along any axis or in time.
SweepResult sweep_grid(const ImplicitSolution& sol, const Lattice& xgrid,
                       const std::vector<double>& times, const SolveOptions& opts = {},
                       std::size_t workers = 1);

}  // namespace hodohj
