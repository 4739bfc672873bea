#include "hodohj/solver.hpp"

#include "hodohj/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace hodohj {

BranchPolicy parse_branch_policy(const std::string& name) {
  if (name == "all") return BranchPolicy::All;
  if (name == "min-u") return BranchPolicy::MinU;
  if (name == "max-u") return BranchPolicy::MaxU;
  throw ValidationError("unknown branch policy \"" + name + "\"");
}

const char* to_string(BranchPolicy p) {
  switch (p) {
    case BranchPolicy::All: return "all";
    case BranchPolicy::MinU: return "min-u";
    case BranchPolicy::MaxU: return "max-u";
  }
  return "?";
}

void SolveOptions::validate() const {
  if (!(newton_tol > 0.0)) throw ValidationError("newton_tol must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (!(damping > 0.0 && damping < 1.0)) throw ValidationError("damping must lie in (0, 1)");
  if (!(min_step > 0.0)) throw ValidationError("min_step must be positive");
  if (multistart_count < 1) throw ValidationError("multistart_count must be at least 1");
  if (!(dedup_tol > 0.0)) throw ValidationError("dedup_tol must be positive");
  if (multistart_box.lower.size() != multistart_box.upper.size()) {
    throw ValidationError("multistart box bounds differ in length");
  }
  for (Eigen::Index a = 0; a < multistart_box.lower.size(); ++a) {
    if (multistart_box.lower[a] > multistart_box.upper[a]) {
      throw ValidationError("multistart box is empty");
    }
  }
}

Box SolveOptions::seed_box(std::size_t n) const {
  const auto m = static_cast<Eigen::Index>(n);
  if (multistart_box.lower.size() == 0) return {Vec::Constant(m, -2.0), Vec::Constant(m, 2.0)};
  if (multistart_box.lower.size() == 1) {
    return {Vec::Constant(m, multistart_box.lower[0]), Vec::Constant(m, multistart_box.upper[0])};
  }
  if (multistart_box.lower.size() != m) throw ValidationError("multistart box dimension mismatch");
  return multistart_box;
}

namespace {

void finish(const ImplicitSolution& sol, const Vec& x, double t, BranchResult& r) {
  try {
    r.u = u_from_y(sol, x, t, r.y);
    r.det_j = condition_jacobian(sol, t, r.y).determinant();
    r.hess_u = hessian_u(sol, t, r.y);
    r.rank = rank_classify(r.hess_u);
  } catch (const Error&) {
    r.u = std::numeric_limits<double>::quiet_NaN();
    r.hess_u.reset();
    r.rank = -1;
  }
}

bool lexicographic_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

BranchResult newton_solve(const ImplicitSolution& sol, const Vec& x, double t, const Vec& y0,
                          const SolveOptions& opts) {
  const auto m = static_cast<Eigen::Index>(sol.dim());
  if (x.size() != m || y0.size() != m) throw ValidationError("query dimension mismatch");

  BranchResult r;
  r.y = y0;
  Vec f;
  try {
    f = condition_residual(sol, x, t, r.y);
  } catch (const Error&) {
    r.status = BranchResult::Status::DomainEscape;
    r.condition_residual_norm = std::numeric_limits<double>::infinity();
    r.u = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double norm = f.norm();
  bool regularized = false;

  for (;;) {
    if (norm <= opts.newton_tol) {
      r.converged = true;
      r.status = BranchResult::Status::Converged;
      break;
    }
    if (r.iterations >= opts.max_iter) {
      r.status = BranchResult::Status::MaxIterations;
      break;
    }
    Mat j = condition_jacobian(sol, t, r.y);
    const bool singular = is_singular(j);
    if (singular) {
      if (regularized) {
        r.status = BranchResult::Status::SingularJacobian;
        break;
      }
      const double mu = 1e-8 * std::max(1.0, j.cwiseAbs().maxCoeff());
      j += mu * Mat::Identity(m, m);
      regularized = true;
    } else {
      regularized = false;
    }
    const Vec step = j.fullPivLu().solve(-f);
    if (!step.allFinite()) {
      r.status = BranchResult::Status::SingularJacobian;
      break;
    }

    bool accepted = false;
    bool escaped = false;
    Vec y_try;
    Vec f_try;
    for (double alpha = 1.0; alpha >= opts.min_step; alpha *= opts.damping) {
      y_try = r.y + alpha * step;
      try {
        f_try = condition_residual(sol, x, t, y_try);
      } catch (const Error&) {
        escaped = true;
        continue;
      }
      if (f_try.norm() < norm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.status = singular  ? BranchResult::Status::SingularJacobian
                 : escaped ? BranchResult::Status::DomainEscape
                           : BranchResult::Status::Stalled;
      break;
    }
    r.y = y_try;
    f = f_try;
    norm = f.norm();
    ++r.iterations;
  }
  r.condition_residual_norm = norm;
  finish(sol, x, t, r);
  return r;
}

BranchSet multistart_branches(const ImplicitSolution& sol, const Vec& x, double t,
                              const SolveOptions& opts, const std::vector<Vec>& extra_seeds) {
  opts.validate();
  const std::size_t n = sol.dim();
  const Box box = opts.seed_box(n);

  std::vector<Vec> seeds = extra_seeds;
  if (opts.multistart_count == 1) {
    seeds.push_back(0.5 * (box.lower + box.upper));
  } else {
    const Lattice lattice(box, std::vector<std::size_t>(n, opts.multistart_count));
    for (std::size_t i = 0; i < lattice.size(); ++i) seeds.push_back(lattice.point(i));
  }

  BranchSet set;
  set.x = x;
  set.t = t;
  for (const Vec& seed : seeds) {
    ++set.seeds_tried;
    BranchResult r = newton_solve(sol, x, t, seed, opts);
    if (!r.converged || !std::isfinite(r.u)) {
      if (!set.best_failure ||
          r.condition_residual_norm < set.best_failure->condition_residual_norm) {
        set.best_failure = std::move(r);
      }
      continue;
    }
    const bool duplicate = std::any_of(set.branches.begin(), set.branches.end(), [&](const auto& b) {
      return (b.y - r.y).norm() <= opts.dedup_tol;
    });
    if (!duplicate) set.branches.push_back(std::move(r));
  }
  // u values equal up to rounding count as ties. Insertion sort, since the
  // tolerant comparison is not a strict weak order.
  auto before = [](const BranchResult& a, const BranchResult& b) {
    if (std::abs(a.u - b.u) > 1e-12 * std::max({1.0, std::abs(a.u), std::abs(b.u)})) return a.u < b.u;
    return lexicographic_less(a.y, b.y);
  };
  for (std::size_t i = 1; i < set.branches.size(); ++i) {
    for (std::size_t j = i; j > 0 && before(set.branches[j], set.branches[j - 1]); --j) {
      std::swap(set.branches[j], set.branches[j - 1]);
    }
  }
  if (!set.branches.empty()) set.best_failure.reset();
  return set;
}

const BranchResult& select_branch(const BranchSet& set, BranchPolicy policy) {
  if (policy == BranchPolicy::All) {
    throw ValidationError("policy 'all' selects the whole set, not one branch");
  }
  if (set.branches.empty()) throw Error("no branch to select: empty branch set");
  const bool want_min = policy == BranchPolicy::MinU;
  double target = set.branches.front().u;
  for (const auto& b : set.branches) target = want_min ? std::min(target, b.u) : std::max(target, b.u);
  const double tie = 1e-12 * std::max(1.0, std::abs(target));
  const BranchResult* best = nullptr;
  for (const auto& b : set.branches) {
    if (std::abs(b.u - target) > tie) continue;
    if (!best || lexicographic_less(b.y, best->y)) best = &b;
  }
  return *best;
}

SpaceTimeFunction branch_evaluator(const ImplicitSolution& sol, Vec seed, const SolveOptions& opts) {
  return [sol, seed = std::move(seed), opts](const Vec& x, double t) {
    const BranchResult r = newton_solve(sol, x, t, seed, opts);
    if (!r.converged) {
      throw DomainError(std::string("branch continuation failed: ") + to_string(r.status));
    }
    return r.u;
  };
}

SpaceTimeFunction selected_evaluator(const ImplicitSolution& sol, const SolveOptions& opts) {
  return [sol, opts](const Vec& x, double t) {
    const BranchSet set = multistart_branches(sol, x, t, opts);
    if (set.empty()) throw DomainError("no branch found");
    const BranchPolicy p = opts.branch_policy == BranchPolicy::All ? BranchPolicy::MinU
                                                                   : opts.branch_policy;
    return select_branch(set, p).u;
  };
}

int SweepPoint::rank() const {
  if (!selected) return -1;
  return set.branches[*selected].rank;
}

SweepResult sweep_grid(const ImplicitSolution& sol, const Lattice& xgrid,
                       const std::vector<double>& times, const SolveOptions& opts,
                       std::size_t workers) {
  opts.validate();
  if (xgrid.dim() != sol.dim()) throw ValidationError("sweep lattice dimension mismatch");
  if (xgrid.size() == 0 || times.empty()) throw ValidationError("sweep grids must be nonempty");
  if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("time list must be sorted");

  SweepResult res;
  res.lattice = xgrid;
  res.times = times;
  const std::size_t per_time = xgrid.size();
  res.points.resize(per_time * times.size());

  const std::size_t row_len = xgrid.counts.back();
  const std::size_t rows_per_time = per_time / row_len;
  const BranchPolicy policy =
      opts.branch_policy == BranchPolicy::All ? BranchPolicy::MinU : opts.branch_policy;

  parallel_for(rows_per_time * times.size(), workers, [&](std::size_t row) {
    const std::size_t ti = row / rows_per_time;
    const std::size_t first = (row % rows_per_time) * row_len;
    std::vector<Vec> warm;
    for (std::size_t k = 0; k < row_len; ++k) {
      SweepPoint& p = res.points[ti * per_time + first + k];
      p.x = xgrid.point(first + k);
      p.t = times[ti];
      try {
        p.set = multistart_branches(sol, p.x, p.t, opts, warm);
        if (!p.set.empty()) {
          const BranchResult& chosen = select_branch(p.set, policy);
          p.selected = static_cast<std::size_t>(&chosen - p.set.branches.data());
          p.det_j = chosen.det_j;
          p.singular = std::any_of(p.set.branches.begin(), p.set.branches.end(),
                                   [](const auto& b) { return !b.hess_u.has_value(); });
        } else if (p.set.best_failure) {
          p.det_j = p.set.best_failure->det_j;
          p.singular = p.set.best_failure->status == BranchResult::Status::SingularJacobian;
          p.error = std::string("no branch converged: ") + to_string(p.set.best_failure->status);
        }
      } catch (const Error& e) {
        p.error = e.what();
      }
      warm.clear();
      for (const auto& b : p.set.branches) warm.push_back(b.y);
    }
  });

  auto changed = [](const SweepPoint& p, const SweepPoint& q) {
    if (p.singular || q.singular || p.set.empty() || q.set.empty()) return false;
    if (p.branch_count() != q.branch_count()) return true;
    return p.det_j * q.det_j < 0.0;
  };
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (std::size_t flat = 0; flat < per_time; ++flat) {
      SweepPoint& p = res.points[ti * per_time + flat];
      bool flag = p.singular;
      if (ti > 0) flag = flag || changed(p, res.points[(ti - 1) * per_time + flat]);
      auto idx = xgrid.unflatten(flat);
      for (std::size_t a = 0; a < xgrid.dim() && !flag; ++a) {
        if (idx[a] == 0) continue;
        auto prev = idx;
        --prev[a];
        flag = changed(p, res.points[ti * per_time + xgrid.flatten(prev)]);
      }
      p.caustic = flag;
    }
  }
  return res;
}

}  // namespace hodohj
