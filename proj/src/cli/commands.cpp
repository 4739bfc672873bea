#include "hodohj/cli/commands.hpp"

#include "CLI11.hpp"
#include "hodohj/hodograph.hpp"
#include "hodohj/oracles.hpp"
#include "hodohj/parallel.hpp"
#include "hodohj/solver.hpp"
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace hodohj::cli {

using json = nlohmann::json;

namespace {

/// Gate failures unwind to exit code 3 after the report is written.
struct Outcome {
  bool gate_failed = false;
  std::string message;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << fields[i];
    os_ << '\n';
    ++rows_;
  }
  std::size_t width() const { return width_; }
  std::string str() const { return os_.str(); }

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::ostringstream os_;
};

std::vector<std::string> names(const std::string& prefix, std::size_t n) {
  return indexed_names(prefix, n);
}

void append(std::vector<std::string>& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(format_double(v[i]));
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Artifacts {
  std::filesystem::path dir;
  std::set<std::string> formats;

  bool wants(const std::string& f) const { return formats.count(f) > 0; }

  void text(const std::string& name, const std::string& content) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << content;
  }
  void csv(const std::string& command, const Csv& c) const {
    if (wants("csv")) text(command + ".csv", c.str());
  }
  void report(const std::string& command, json r) const {
    if (wants("json")) text(command + ".json", r.dump(2) + "\n");
  }
};

json report_head(const std::string& command, const RunConfig& cfg) {
  json r;
  r["schema_version"] = kSchemaVersion;
  r["command"] = command;
  r["dimension"] = cfg.setup.n;
  r["lambda"] = cfg.setup.lambda;
  if (!cfg.convention.empty()) r["convention"] = cfg.convention;
  r["branch_policy"] = to_string(cfg.solver.branch_policy);
  return r;
}

ImplicitSolution implicit_solution(const RunConfig& cfg) {
  return ImplicitSolution(cfg.setup, build_phi(cfg));
}

void require_query(const RunConfig& cfg) {
  if (cfg.query.size() == 0) throw ValidationError("field 'query': required for this command");
}

/// Branch sets for every query, in query order (time-major for grids).
struct QueryResult {
  Vec x;
  double t = 0.0;
  BranchSet set;
  std::vector<std::size_t> chosen;
  bool caustic = false;
  std::string error;
};

std::vector<QueryResult> solve_queries(const ImplicitSolution& sol, const RunConfig& cfg,
                                       std::size_t workers) {
  require_query(cfg);
  const SolveOptions& opts = cfg.solver;
  std::vector<QueryResult> out(cfg.query.size());
  auto choose = [&](QueryResult& q) {
    if (q.set.empty()) return;
    if (opts.branch_policy == BranchPolicy::All) {
      for (std::size_t i = 0; i < q.set.branches.size(); ++i) q.chosen.push_back(i);
    } else {
      const BranchResult& b = select_branch(q.set, opts.branch_policy);
      q.chosen.push_back(static_cast<std::size_t>(&b - q.set.branches.data()));
    }
  };
  if (cfg.query.grid) {
    const SweepResult sweep = sweep_grid(sol, *cfg.query.grid, cfg.query.times, opts, workers);
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
      const SweepPoint& p = sweep.points[i];
      out[i] = {p.x, p.t, p.set, {}, p.caustic, p.error};
      choose(out[i]);
    }
  } else {
    parallel_for(out.size(), workers, [&](std::size_t i) {
      QueryResult& q = out[i];
      q.x = cfg.query.x[i];
      q.t = cfg.query.t[i];
      try {
        q.set = multistart_branches(sol, q.x, q.t, opts);
        choose(q);
      } catch (const Error& e) {
        q.error = e.what();
      }
    });
  }
  for (auto& q : out) {
    if (q.error.empty() && q.set.empty()) {
      q.error = q.set.best_failure
                    ? std::string("no branch converged: ") + to_string(q.set.best_failure->status)
                    : "no branch converged";
    }
  }
  return out;
}

std::string status_of(const QueryResult& q) { return q.error.empty() ? "ok" : "no-branch"; }

json point_json(const QueryResult& q) {
  json p;
  p["x"] = vec(q.x);
  p["t"] = num(q.t);
  p["status"] = status_of(q);
  p["branch_count"] = q.set.branches.size();
  if (!q.error.empty()) p["message"] = q.error;
  return p;
}

json branch_json(const BranchResult& b) {
  json j;
  j["u"] = num(b.u);
  j["y"] = vec(b.y);
  j["rank"] = b.rank;
  j["det_J"] = num(b.det_j);
  j["condition_residual"] = num(b.condition_residual_norm);
  j["iterations"] = b.iterations;
  return j;
}

/// Placeholder fields for a query without a branch.
std::vector<std::string> missing(std::size_t count) {
  return std::vector<std::string>(count, "nan");
}

// ---------------------------------------------------------------- solve

Outcome cmd_solve(const RunConfig& cfg, const Artifacts& art, std::size_t workers) {
  const std::size_t n = cfg.setup.n;
  Csv csv(cat(cat(cat(names("x", n), {"t", "u"}), names("y", n)),
              {"rank", "branch_count", "det_J", "residual", "status"}));
  json rep = report_head("solve", cfg);
  json points = json::array();
  std::size_t failures = 0;

  if (cfg.plane_wave) {
    require_query(cfg);
    const PlaneWaveSolution pw{cfg.setup, cfg.plane_wave->b, cfg.plane_wave->c};
    const int rank = rank_classify(pw.hessian());
    auto each = [&](const Vec& x, double t) {
      const double u = plane_wave_eval(pw, x, t);
      std::vector<std::string> row;
      append(row, x);
      row.push_back(format_double(t));
      row.push_back(format_double(u));
      append(row, pw.b);
      row.insert(row.end(), {std::to_string(rank), "1", "nan", "0", "ok"});
      csv.row(row);
      json p{{"x", vec(x)}, {"t", num(t)}, {"status", "ok"}, {"branch_count", 1}};
      p["branches"] = json::array({json{{"u", num(u)}, {"y", vec(pw.b)}, {"rank", rank}}});
      points.push_back(p);
    };
    if (cfg.query.grid) {
      for (double t : cfg.query.times)
        for (std::size_t i = 0; i < cfg.query.grid->size(); ++i) each(cfg.query.grid->point(i), t);
    } else {
      for (std::size_t i = 0; i < cfg.query.x.size(); ++i) each(cfg.query.x[i], cfg.query.t[i]);
    }
  } else {
    const ImplicitSolution sol = implicit_solution(cfg);
    for (const QueryResult& q : solve_queries(sol, cfg, workers)) {
      json p = point_json(q);
      json branches = json::array();
      if (q.chosen.empty()) {
        ++failures;
        std::vector<std::string> row;
        append(row, q.x);
        row.push_back(format_double(q.t));
        const auto gap = missing(n + 1);
        row.insert(row.end(), gap.begin(), gap.end());
        row.insert(row.end(), {"-1", "0", "nan", "nan", "no-branch"});
        csv.row(row);
      }
      for (std::size_t k : q.chosen) {
        const BranchResult& b = q.set.branches[k];
        std::vector<std::string> row;
        append(row, q.x);
        row.push_back(format_double(q.t));
        row.push_back(format_double(b.u));
        append(row, b.y);
        row.insert(row.end(), {std::to_string(b.rank), std::to_string(q.set.branches.size()),
                               format_double(b.det_j), format_double(b.condition_residual_norm), "ok"});
        csv.row(row);
        branches.push_back(branch_json(b));
      }
      p["branches"] = branches;
      points.push_back(p);
    }
  }
  rep["points"] = points;
  rep["summary"] = {{"queries", points.size()}, {"failures", failures}};
  rep["exit_code"] = kExitOk;
  art.csv("solve", csv);
  art.report("solve", rep);
  return {};
}

// ---------------------------------------------------------------- verify

Outcome cmd_verify(const RunConfig& cfg, const Artifacts& art, std::size_t workers) {
  const std::size_t n = cfg.setup.n;
  const double h = cfg.verify_h;
  Csv csv(cat(cat(cat(names("x", n), {"t", "u"}), names("y", n)), {"residual", "status"}));
  json rep = report_head("verify", cfg);
  rep["stencil_h"] = h;
  json points = json::array();
  double worst = 0.0;
  std::size_t failures = 0;

  auto record = [&](const Vec& x, double t, double u, const Vec& y, const SpaceTimeFunction& f, json& p) {
    std::vector<std::string> row;
    append(row, x);
    row.push_back(format_double(t));
    row.push_back(format_double(u));
    append(row, y);
    try {
      const double r = std::abs(pde_residual_numeric(f, cfg.setup, x, t, h));
      worst = std::max(worst, r);
      row.insert(row.end(), {format_double(r), "ok"});
      p["residuals"].push_back(num(r));
    } catch (const StencilError& e) {
      ++failures;
      row.insert(row.end(), {"nan", "stencil-failed"});
      p["residuals"].push_back(nullptr);
      p["status"] = "stencil-failed";
      p["message"] = e.what();
    }
    csv.row(row);
  };

  if (cfg.plane_wave) {
    require_query(cfg);
    const PlaneWaveSolution pw{cfg.setup, cfg.plane_wave->b, cfg.plane_wave->c};
    auto f = [pw](const Vec& x, double t) { return plane_wave_eval(pw, x, t); };
    auto each = [&](const Vec& x, double t) {
      json p{{"x", vec(x)}, {"t", num(t)}, {"status", "ok"}, {"residuals", json::array()}};
      record(x, t, f(x, t), pw.b, f, p);
      points.push_back(p);
    };
    if (cfg.query.grid) {
      for (double t : cfg.query.times)
        for (std::size_t i = 0; i < cfg.query.grid->size(); ++i) each(cfg.query.grid->point(i), t);
    } else {
      for (std::size_t i = 0; i < cfg.query.x.size(); ++i) each(cfg.query.x[i], cfg.query.t[i]);
    }
  } else {
    const ImplicitSolution sol = implicit_solution(cfg);
    for (const QueryResult& q : solve_queries(sol, cfg, workers)) {
      json p = point_json(q);
      p["residuals"] = json::array();
      if (q.chosen.empty()) {
        ++failures;
        std::vector<std::string> row;
        append(row, q.x);
        row.push_back(format_double(q.t));
        const auto gap = missing(n + 2);
        row.insert(row.end(), gap.begin(), gap.end());
        row.push_back("no-branch");
        csv.row(row);
      }
      for (std::size_t k : q.chosen) {
        const BranchResult& b = q.set.branches[k];
        record(q.x, q.t, b.u, b.y, branch_evaluator(sol, b.y, cfg.solver), p);
      }
      points.push_back(p);
    }
  }

  rep["points"] = points;
  rep["summary"] = {{"queries", points.size()}, {"failures", failures}, {"max_residual", num(worst)}};
  Outcome out;
  if (cfg.gates.residual_max) {
    const bool pass = failures == 0 && worst <= *cfg.gates.residual_max;
    rep["gates"]["residual_max"] = {{"limit", *cfg.gates.residual_max}, {"value", num(worst)}, {"pass", pass}};
    if (!pass) {
      out.gate_failed = true;
      out.message = "verify gate failed: max residual " + format_double(worst) + " against limit " +
                    format_double(*cfg.gates.residual_max) +
                    (failures ? " with " + std::to_string(failures) + " failed points" : "");
    }
  }
  rep["exit_code"] = out.gate_failed ? kExitGateFailed : kExitOk;
  art.csv("verify", csv);
  art.report("verify", rep);
  return out;
}

// ---------------------------------------------------------------- transform

Outcome cmd_transform(const RunConfig& cfg, const Artifacts& art, std::size_t workers) {
  if (cfg.plane_wave) {
    throw ValidationError("field 'plane_wave': a rank-0 solution has no hodograph image to invert");
  }
  const std::size_t n = cfg.setup.n;
  const ImplicitSolution sol = implicit_solution(cfg);
  Csv csv(cat(cat(cat(names("x", n), {"t"}), names("y", n)),
              {"u", "H", "H_general", "inverse_error", "transformed_residual", "status"}));
  json rep = report_head("transform", cfg);
  json points = json::array();
  double worst_h = 0.0, worst_inv = 0.0, worst_res = 0.0;
  std::size_t failures = 0;

  for (const QueryResult& q : solve_queries(sol, cfg, workers)) {
    json p = point_json(q);
    p["images"] = json::array();
    if (q.chosen.empty()) {
      ++failures;
      std::vector<std::string> row;
      append(row, q.x);
      row.push_back(format_double(q.t));
      const auto gap = missing(n + 5);
      row.insert(row.end(), gap.begin(), gap.end());
      row.push_back("no-branch");
      csv.row(row);
    }
    for (std::size_t k : q.chosen) {
      const BranchResult& b = q.set.branches[k];
      const double H = q.x.dot(b.y) - b.u;
      const double Hg = H_general(sol, q.t, b.y);
      // grad_y H_general = 2 lambda t y - grad Phi recovers x
      const Vec x_back = 2.0 * cfg.setup.lambda * q.t * b.y - sol.phi->jet(b.y).gradient;
      const double inv = (x_back - q.x).norm();
      const double res = std::abs(transformed_pde_residual(sol, q.t, b.y, cfg.verify_h));
      worst_h = std::max(worst_h, std::abs(H - Hg));
      worst_inv = std::max(worst_inv, inv);
      worst_res = std::max(worst_res, res);
      std::vector<std::string> row;
      append(row, q.x);
      row.push_back(format_double(q.t));
      append(row, b.y);
      row.insert(row.end(), {format_double(b.u), format_double(H), format_double(Hg), format_double(inv),
                             format_double(res), "ok"});
      csv.row(row);
      p["images"].push_back({{"y", vec(b.y)}, {"u", num(b.u)}, {"H", num(H)}, {"H_general", num(Hg)},
                             {"inverse_error", num(inv)}, {"transformed_residual", num(res)}});
    }
    points.push_back(p);
  }
  rep["points"] = points;
  rep["summary"] = {{"queries", points.size()},
                    {"failures", failures},
                    {"max_H_mismatch", num(worst_h)},
                    {"max_inverse_error", num(worst_inv)},
                    {"max_transformed_residual", num(worst_res)}};
  rep["exit_code"] = kExitOk;
  art.csv("transform", csv);
  art.report("transform", rep);
  return {};
}

// ---------------------------------------------------------------- conjugate

Outcome cmd_conjugate(const RunConfig& cfg, const Artifacts& art) {
  const GridField g = sample_initial_data(cfg);
  const Lattice dual = dual_lattice(cfg, g);
  const GridField conj = conjugate_grid(g, dual);
  GridField phi = conj;
  for (double& v : phi.values) v = -v;

  // Double conjugation on the primal lattice measures how far g is from convex.
  const GridField back = conjugate_grid(conj, g.lattice);
  const Lattice inner = interior_half(g.lattice);
  const auto gb = make_grid_field(back);
  const auto gg = make_grid_field(g);
  const ComparisonReport dc = compare_fields([&](const Vec& p) { return gb->value(p); },
                                             [&](const Vec& p) { return gg->value(p); }, inner);

  if (art.wants("grid")) {
    write_grid(art.dir / "conjugate.grid", conj);
    write_grid(art.dir / "phi.grid", phi);
  }
  if (art.wants("csv")) {
    write_grid_csv(art.dir / "conjugate.csv", conj);
    write_grid_csv(art.dir / "phi.csv", phi);
  }
  json rep = report_head("conjugate", cfg);
  auto lat = [](const Lattice& l) {
    return json{{"lower", vec(l.box.lower)}, {"upper", vec(l.box.upper)}, {"counts", l.counts}};
  };
  rep["primal"] = lat(g.lattice);
  rep["dual"] = lat(dual);
  rep["summary"] = {{"conjugate_min", num(*std::min_element(conj.values.begin(), conj.values.end()))},
                    {"conjugate_max", num(*std::max_element(conj.values.begin(), conj.values.end()))},
                    {"double_conjugate_linf", num(dc.linf)},
                    {"double_conjugate_rms", num(dc.l2)}};
  rep["exit_code"] = kExitOk;
  art.report("conjugate", rep);
  return {};
}

// ---------------------------------------------------------------- compare

/// Preimage x0 of x under the ray map x0 + 2 lambda t grad g(x0).
double characteristic_value(const ScalarField& g, const HJSetup& s, const Vec& x, double t) {
  Vec x0 = x;
  const auto m = static_cast<Eigen::Index>(s.n);
  for (int it = 0; it < 100; ++it) {
    const Jet j = g.jet(x0);
    const Vec r = x0 + 2.0 * s.lambda * t * j.gradient - x;
    if (r.norm() <= 1e-13 * std::max(1.0, x.norm())) {
      return j.value + s.lambda * t * j.gradient.squaredNorm();
    }
    const Mat jac = Mat::Identity(m, m) + 2.0 * s.lambda * t * j.hessian;
    if (is_singular(jac)) throw DomainError("ray map is singular: characteristics have crossed");
    x0 -= jac.fullPivLu().solve(r);
  }
  throw DomainError("no characteristic reaches this point");
}

SampleSource make_source(const std::string& src, const RunConfig& cfg, double t) {
  const std::size_t n = cfg.setup.n;
  if (src == "implicit") {
    auto f = selected_evaluator(implicit_solution(cfg), cfg.solver);
    return [f, t](const Vec& x) { return f(x, t); };
  }
  if (src == "hopf") {
    const ImplicitSolution sol = implicit_solution(cfg);
    const CompareSpec& c = *cfg.compare;
    const Lattice lat = c.hopf_lattice ? *c.hopf_lattice
                                       : Lattice(cfg.solver.seed_box(n), std::vector<std::size_t>(n, 201));
    const Extremum e = c.hopf_extremum;
    return [sol, lat, e, t](const Vec& x) { return hopf_bruteforce(sol, x, t, lat, 4, e).u; };
  }
  if (src == "characteristics") {
    const FieldPtr g = build_initial_data(cfg);
    const HJSetup s = cfg.setup;
    return [g, s, t](const Vec& x) { return characteristic_value(*g, s, x, t); };
  }
  if (src == "lax-friedrichs") {
    const GridField g = sample_initial_data(cfg);
    const FieldPtr u = make_grid_field(t > 0.0 ? lax_friedrichs_solve(g, cfg.setup, t, cfg.lax_friedrichs) : g);
    return [u](const Vec& x) { return u->value(x); };
  }
  if (src.rfind("exact:", 0) == 0) {
    auto names = indexed_names("x", n);
    names.push_back("t");
    const Expression e = parse(src.substr(6), names);
    return [e, t, n](const Vec& x) {
      Vec xt(x.size() + 1);
      xt << x, t;
      (void)n;
      return e.evaluate(xt);
    };
  }
  if (src.rfind("grid:", 0) == 0) {
    std::filesystem::path p = src.substr(5);
    if (!p.is_absolute()) p = cfg.base_dir / p;
    auto grid = std::make_shared<GridField>(read_grid(p));
    if (grid->dim() != n) throw ValidationError("field 'compare': grid " + p.string() + " has the wrong dimension");
    return [grid](const Vec& x) { return grid->interpolate(x); };
  }
  throw ValidationError("field 'compare': unknown source \"" + src + "\"");
}

Outcome cmd_compare(const RunConfig& cfg, const Artifacts& art) {
  if (!cfg.compare) throw ValidationError("field 'compare': required for this command");
  const CompareSpec& c = *cfg.compare;
  const SampleSource a = make_source(c.a, cfg, c.t);
  const SampleSource b = make_source(c.b, cfg, c.t);
  const ComparisonReport r = compare_fields(a, b, c.region);

  const std::size_t n = cfg.setup.n;
  Csv csv(cat(names("x", n), {"a", "b", "difference"}));
  for (std::size_t i = 0; i < c.region.size(); ++i) {
    const Vec x = c.region.point(i);
    double va = std::numeric_limits<double>::quiet_NaN(), vb = va;
    try {
      va = a(x);
    } catch (const Error&) {
    }
    try {
      vb = b(x);
    } catch (const Error&) {
    }
    std::vector<std::string> row;
    append(row, x);
    row.insert(row.end(), {format_double(va), format_double(vb), format_double(std::abs(va - vb))});
    csv.row(row);
  }

  json rep = report_head("compare", cfg);
  rep["sources"] = {{"a", c.a}, {"b", c.b}};
  rep["t"] = c.t;
  rep["comparison"] = {{"linf", num(r.linf)},
                       {"rms", num(r.l2)},
                       {"points_compared", r.points_compared},
                       {"worst_point", vec(r.worst_point)},
                       {"notes", r.notes}};
  Outcome out;
  if (r.points_compared == 0) {
    out.gate_failed = cfg.gates.compare_linf.has_value();
    out.message = "compare: no point could be evaluated by both sources";
  }
  if (cfg.gates.compare_linf) {
    const bool pass = r.points_compared > 0 && r.linf <= *cfg.gates.compare_linf;
    rep["gates"]["compare_linf"] = {{"limit", *cfg.gates.compare_linf}, {"value", num(r.linf)}, {"pass", pass}};
    if (!pass) {
      out.gate_failed = true;
      if (out.message.empty()) {
        out.message = "compare gate failed: linf " + format_double(r.linf) + " against limit " +
                      format_double(*cfg.gates.compare_linf);
      }
    }
  }
  rep["exit_code"] = out.gate_failed ? kExitGateFailed : kExitOk;
  art.csv("compare", csv);
  art.report("compare", rep);
  return out;
}

// ---------------------------------------------------------------- rank-map

Outcome cmd_rank_map(const RunConfig& cfg, const Artifacts& art, std::size_t workers) {
  require_query(cfg);
  const std::size_t n = cfg.setup.n;
  Csv csv(cat(cat(names("x", n), {"t"}), {"u", "rank", "branch_count", "det_J", "residual", "caustic", "status"}));
  json rep = report_head("rank-map", cfg);
  json caustics = json::array();
  json transitions = json::array();
  std::map<int, std::size_t> rank_histogram;

  if (cfg.plane_wave) {
    const PlaneWaveSolution pw{cfg.setup, cfg.plane_wave->b, cfg.plane_wave->c};
    const int rank = rank_classify(pw.hessian());
    auto f = [pw](const Vec& x, double t) { return plane_wave_eval(pw, x, t); };
    double worst = 0.0;
    auto each = [&](const Vec& x, double t) {
      const double r = std::abs(pde_residual_numeric(f, cfg.setup, x, t, cfg.verify_h));
      worst = std::max(worst, r);
      ++rank_histogram[rank];
      std::vector<std::string> row;
      append(row, x);
      row.push_back(format_double(t));
      row.insert(row.end(), {format_double(f(x, t)), std::to_string(rank), "1", "nan", format_double(r), "0", "ok"});
      csv.row(row);
    };
    if (cfg.query.grid) {
      for (double t : cfg.query.times)
        for (std::size_t i = 0; i < cfg.query.grid->size(); ++i) each(cfg.query.grid->point(i), t);
    } else {
      for (std::size_t i = 0; i < cfg.query.x.size(); ++i) each(cfg.query.x[i], cfg.query.t[i]);
    }
    rep["plane_wave"] = {{"b", vec(pw.b)}, {"c", num(pw.c)}, {"max_residual", num(worst)}, {"stencil_h", cfg.verify_h}};
  } else {
    const ImplicitSolution sol = implicit_solution(cfg);
    const std::vector<QueryResult> qs = solve_queries(sol, cfg, workers);
    for (const QueryResult& q : qs) {
      std::vector<std::string> row;
      append(row, q.x);
      row.push_back(format_double(q.t));
      int rank = -1;
      if (q.chosen.empty()) {
        row.insert(row.end(), {"nan", "-1", "0", "nan", "nan"});
      } else {
        // With policy all the map still shows one rank: that of the first listed branch.
        const BranchResult& b = q.set.branches[q.chosen.front()];
        rank = b.rank;
        row.insert(row.end(), {format_double(b.u), std::to_string(b.rank), std::to_string(q.set.branches.size()),
                               format_double(b.det_j), format_double(b.condition_residual_norm)});
      }
      ++rank_histogram[rank];
      row.push_back(q.caustic ? "1" : "0");
      row.push_back(status_of(q));
      csv.row(row);
      if (q.caustic) caustics.push_back({{"x", vec(q.x)}, {"t", num(q.t)}});
    }
    if (cfg.query.grid) {
      const Lattice& lat = *cfg.query.grid;
      const std::size_t per_time = lat.size();
      for (std::size_t ti = 0; ti < cfg.query.times.size(); ++ti) {
        for (std::size_t flat = 0; flat < per_time; ++flat) {
          const QueryResult& q = qs[ti * per_time + flat];
          const auto idx = lat.unflatten(flat);
          for (std::size_t a = 0; a < n; ++a) {
            if (idx[a] == 0) continue;
            auto prev = idx;
            --prev[a];
            const QueryResult& p = qs[ti * per_time + lat.flatten(prev)];
            if (p.set.branches.size() != q.set.branches.size()) {
              transitions.push_back({{"axis", a + 1},
                                     {"from_x", vec(p.x)},
                                     {"to_x", vec(q.x)},
                                     {"t", num(q.t)},
                                     {"from_count", p.set.branches.size()},
                                     {"to_count", q.set.branches.size()}});
            }
          }
        }
      }
    }
  }

  json hist = json::object();
  for (const auto& [r, c] : rank_histogram) hist[std::to_string(r)] = c;
  std::set<double> caustic_times;
  for (const auto& c : caustics) caustic_times.insert(c["t"].get<double>());
  rep["rank_histogram"] = hist;
  rep["caustics"] = caustics;
  rep["caustic_times"] = std::vector<double>(caustic_times.begin(), caustic_times.end());
  rep["branch_count_transitions"] = transitions;
  rep["exit_code"] = kExitOk;
  art.csv("rank-map", csv);
  art.report("rank-map", rep);
  return {};
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "verify", "transform", "conjugate", "compare", "rank-map"};
  return names;
}

int dispatch(const std::string& command, const RunConfig& cfg, const DispatchOptions& opts,
             std::ostream& err) {
  try {
    const auto& known = command_names();
    if (std::find(known.begin(), known.end(), command) == known.end()) {
      throw ValidationError("unknown command \"" + command + "\"");
    }
    if (opts.workers < 1) throw ValidationError("--workers must be at least 1");
    Artifacts art;
    art.dir = opts.out ? *opts.out
                       : (cfg.output.directory.is_absolute() ? cfg.output.directory
                                                             : cfg.base_dir / cfg.output.directory);
    art.formats = cfg.output.formats;
    std::filesystem::create_directories(art.dir);

    Outcome out;
    if (command == "solve") out = cmd_solve(cfg, art, opts.workers);
    else if (command == "verify") out = cmd_verify(cfg, art, opts.workers);
    else if (command == "transform") out = cmd_transform(cfg, art, opts.workers);
    else if (command == "conjugate") out = cmd_conjugate(cfg, art);
    else if (command == "compare") out = cmd_compare(cfg, art);
    else out = cmd_rank_map(cfg, art, opts.workers);

    if (out.gate_failed) {
      err << "hodohj: " << out.message << "\n";
      return kExitGateFailed;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "hodohj: " << e.what() << "\n";
    return kExitInvalid;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Implicit solutions of u_t + lambda |grad u|^2 = 0 via the hodograph transform", "hodohj"};
  std::string command;
  std::string config;
  std::string out_dir;
  std::size_t workers = 1;
  std::vector<std::string> overrides;
  std::string commands;
  for (const auto& c : command_names()) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", command, "One of: " + commands)->required();
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--override", overrides, "Config override key=value (dotted keys)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "hodohj: " << e.what() << "\n";
    return kExitInvalid;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config, overrides);
  } catch (const std::exception& e) {
    err << "hodohj: " << e.what() << "\n";
    return kExitInvalid;
  }
  DispatchOptions opts;
  if (!out_dir.empty()) opts.out = out_dir;
  opts.workers = workers;
  return dispatch(command, cfg, opts, err);
}

}  // namespace hodohj::cli
