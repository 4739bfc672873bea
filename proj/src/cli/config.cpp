#include "hodohj/cli/config.hpp"

#include "hodohj/hodograph.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hodohj::cli {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ValidationError("field '" + field + "': " + message);
}

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "(top level)" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(join(where, key), "unknown key");
    }
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double positive(const json& j, const std::string& field) {
  const double v = number(j, field);
  if (!(v > 0.0)) fail(field, "must be positive");
  return v;
}

std::size_t count(const json& j, const std::string& field, std::size_t min = 1) {
  if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min)) {
    fail(field, "expected an integer >= " + std::to_string(min));
  }
  return j.get<std::size_t>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

/// A scalar broadcasts to all n components.
Vec vector(const json& j, const std::string& field, std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  if (j.is_number()) return Vec::Constant(m, number(j, field));
  if (!j.is_array() || j.size() != n) fail(field, "expected a number or " + std::to_string(n) + " numbers");
  Vec v(m);
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], field);
  return v;
}

std::vector<std::size_t> counts(const json& j, const std::string& field, std::size_t n) {
  if (j.is_number()) return std::vector<std::size_t>(n, count(j, field, 2));
  if (!j.is_array() || j.size() != n) fail(field, "expected an integer or " + std::to_string(n) + " integers");
  std::vector<std::size_t> c;
  for (const auto& e : j) c.push_back(count(e, field, 2));
  return c;
}

Box box(const json& j, const std::string& field, std::size_t n) {
  check_keys(j, field, {"lower", "upper"});
  if (!j.contains("lower") || !j.contains("upper")) fail(field, "needs lower and upper");
  Box b{vector(j["lower"], join(field, "lower"), n), vector(j["upper"], join(field, "upper"), n)};
  for (std::size_t a = 0; a < n; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    if (!(b.lower[ia] < b.upper[ia])) fail(field, "lower must be below upper on every axis");
  }
  return b;
}

Lattice lattice(const json& j, const std::string& field, std::size_t n) {
  check_keys(j, field, {"lower", "upper", "counts"});
  if (!j.contains("counts")) fail(field, "needs counts");
  json bounds = j;
  bounds.erase("counts");
  return Lattice(box(bounds, field, n), counts(j["counts"], join(field, "counts"), n));
}

std::vector<double> times(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a nonempty list of times");
  std::vector<double> t;
  for (const auto& e : j) t.push_back(number(e, field));
  if (!std::is_sorted(t.begin(), t.end())) fail(field, "times must be sorted ascending");
  return t;
}

void check_expression(const std::string& source, const std::string& prefix, std::size_t n,
                      const std::string& field, bool with_time = false) {
  auto names = indexed_names(prefix, n);
  if (with_time) names.push_back("t");
  try {
    parse(source, names);
  } catch (const Error& e) {
    fail(field, e.what());
  }
}

std::size_t line_of(const std::string& s, std::size_t byte) {
  byte = std::min(byte, s.size());
  return 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<long>(byte), '\n'));
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    path.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("override key '" + key + "' crosses a non-object");
    node = &next;
  }
  (*node)[path.back()] = value;
}

void read_solver(const json& j, SolveOptions& o, std::size_t n) {
  const std::string f = "solver";
  check_keys(j, f,
             {"newton_tol", "max_iter", "damping", "min_step", "box", "multistart_count",
              "dedup_tol", "branch_policy"});
  if (j.contains("newton_tol")) o.newton_tol = positive(j["newton_tol"], "solver.newton_tol");
  if (j.contains("max_iter")) o.max_iter = static_cast<int>(count(j["max_iter"], "solver.max_iter"));
  if (j.contains("damping")) {
    o.damping = number(j["damping"], "solver.damping");
    if (!(o.damping > 0.0 && o.damping < 1.0)) fail("solver.damping", "must lie in (0, 1)");
  }
  if (j.contains("min_step")) o.min_step = positive(j["min_step"], "solver.min_step");
  if (j.contains("box")) o.multistart_box = box(j["box"], "solver.box", n);
  if (j.contains("multistart_count")) {
    o.multistart_count = count(j["multistart_count"], "solver.multistart_count");
  }
  if (j.contains("dedup_tol")) o.dedup_tol = positive(j["dedup_tol"], "solver.dedup_tol");
  if (j.contains("branch_policy")) {
    try {
      o.branch_policy = parse_branch_policy(text(j["branch_policy"], "solver.branch_policy"));
    } catch (const ValidationError& e) {
      fail("solver.branch_policy", e.what());
    }
  }
}

void read_phi(const json& j, PhiSpec& phi, std::size_t n) {
  if (j.is_string()) {
    phi.kind = PhiSpec::Kind::Expression;
    phi.expression = j.get<std::string>();
    check_expression(phi.expression, "y", n, "phi");
    return;
  }
  check_keys(j, "phi", {"expression", "builtin", "alpha", "coef", "grid"});
  const int sources = static_cast<int>(j.contains("expression")) + static_cast<int>(j.contains("builtin")) +
                      static_cast<int>(j.contains("grid"));
  if (sources != 1) fail("phi", "give exactly one of expression, builtin, grid");
  if (j.contains("expression")) {
    phi.kind = PhiSpec::Kind::Expression;
    phi.expression = text(j["expression"], "phi.expression");
    check_expression(phi.expression, "y", n, "phi.expression");
  } else if (j.contains("grid")) {
    phi.kind = PhiSpec::Kind::Grid;
    phi.grid = text(j["grid"], "phi.grid");
  } else {
    phi.kind = PhiSpec::Kind::Builtin;
    phi.builtin = text(j["builtin"], "phi.builtin");
    if (phi.builtin == "zero") {
      phi.parameter = 0.0;
    } else if (phi.builtin == "quadratic") {
      if (!j.contains("alpha")) fail("phi.alpha", "required for the quadratic builtin");
      phi.parameter = number(j["alpha"], "phi.alpha");
    } else if (phi.builtin == "quartic") {
      phi.parameter = j.contains("coef") ? number(j["coef"], "phi.coef") : 0.25;
    } else {
      fail("phi.builtin", "unknown builtin \"" + phi.builtin + "\" (zero, quadratic, quartic)");
    }
  }
  if (phi.kind != PhiSpec::Kind::Builtin && (j.contains("alpha") || j.contains("coef"))) {
    fail("phi", "alpha and coef apply to builtins only");
  }
}

RunConfig from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "",
             {"convention", "lambda", "dimension", "phi", "initial_data", "plane_wave", "query",
              "solver", "gates", "verify", "compare", "lax_friedrichs", "output"});
  RunConfig cfg;
  cfg.base_dir = base_dir;

  if (!j.contains("dimension")) fail("dimension", "required");
  const std::size_t n = count(j["dimension"], "dimension");
  if (j.contains("convention") && j.contains("lambda")) {
    fail("lambda", "give either convention or lambda, not both");
  }
  if (j.contains("convention")) {
    cfg.convention = text(j["convention"], "convention");
    try {
      cfg.setup = HJSetup::preset(cfg.convention, n);
    } catch (const ValidationError& e) {
      fail("convention", e.what());
    }
  } else if (j.contains("lambda")) {
    cfg.setup = {n, number(j["lambda"], "lambda")};
    if (cfg.setup.lambda == 0.0) fail("lambda", "lambda must be nonzero");
  } else {
    fail("convention", "required (or give lambda)");
  }

  if (j.contains("phi")) read_phi(j["phi"], cfg.phi, n);

  if (j.contains("initial_data")) {
    const json& d = j["initial_data"];
    check_keys(d, "initial_data", {"expression", "box", "counts", "derive_phi", "dual_box", "dual_counts"});
    InitialDataSpec spec;
    if (!d.contains("expression")) fail("initial_data.expression", "required");
    spec.expression = text(d["expression"], "initial_data.expression");
    check_expression(spec.expression, "x", n, "initial_data.expression");
    Box b{Vec::Constant(static_cast<Eigen::Index>(n), -2.0), Vec::Constant(static_cast<Eigen::Index>(n), 2.0)};
    if (d.contains("box")) b = box(d["box"], "initial_data.box", n);
    std::vector<std::size_t> c(n, 201);
    if (d.contains("counts")) c = counts(d["counts"], "initial_data.counts", n);
    spec.primal = Lattice(b, c);
    if (d.contains("dual_box")) spec.dual_box = box(d["dual_box"], "initial_data.dual_box", n);
    if (d.contains("dual_counts")) spec.dual_counts = counts(d["dual_counts"], "initial_data.dual_counts", n);
    if (d.contains("derive_phi")) spec.derive_phi = boolean(d["derive_phi"], "initial_data.derive_phi");
    cfg.initial_data = spec;
  }

  if (j.contains("plane_wave")) {
    const json& p = j["plane_wave"];
    check_keys(p, "plane_wave", {"b", "c"});
    if (!p.contains("b")) fail("plane_wave.b", "required");
    cfg.plane_wave = PlaneWaveSpec{vector(p["b"], "plane_wave.b", n),
                                   p.contains("c") ? number(p["c"], "plane_wave.c") : 0.0};
  }

  // Phi sources must not compete.
  const bool derived = cfg.initial_data && cfg.initial_data->derive_phi;
  if (cfg.phi.kind != PhiSpec::Kind::None && cfg.initial_data) {
    fail("initial_data",
         derived ? "conflicts with phi: derive_phi would give a second Phi source"
                 : "conflicts with phi: set derive_phi and drop phi to derive Phi from the initial data");
  }
  if (derived) cfg.phi.kind = PhiSpec::Kind::FromInitialData;
  if (cfg.plane_wave && cfg.phi.kind != PhiSpec::Kind::None) {
    fail("plane_wave", "conflicts with the Phi source; a plane wave is its own solution");
  }

  if (j.contains("query")) {
    const json& q = j["query"];
    check_keys(q, "query", {"points", "grid", "times"});
    if (q.contains("points") == q.contains("grid")) fail("query", "give exactly one of points, grid");
    if (q.contains("points")) {
      if (q.contains("times")) fail("query.times", "only used with query.grid");
      const json& pts = q["points"];
      if (!pts.is_array() || pts.empty()) fail("query.points", "expected a nonempty list");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string f = "query.points[" + std::to_string(i) + "]";
        const Vec xt = vector(pts[i], f, n + 1);
        if (pts[i].is_number()) fail(f, "expected " + std::to_string(n + 1) + " numbers (x..., t)");
        cfg.query.x.push_back(xt.head(static_cast<Eigen::Index>(n)));
        cfg.query.t.push_back(xt[static_cast<Eigen::Index>(n)]);
      }
    } else {
      cfg.query.grid = lattice(q["grid"], "query.grid", n);
      if (!q.contains("times")) fail("query.times", "required with query.grid");
      cfg.query.times = times(q["times"], "query.times");
    }
  }

  if (j.contains("solver")) read_solver(j["solver"], cfg.solver, n);
  try {
    cfg.solver.validate();
  } catch (const ValidationError& e) {
    fail("solver", e.what());
  }

  if (j.contains("gates")) {
    const json& g = j["gates"];
    check_keys(g, "gates", {"residual_max", "compare_linf"});
    if (g.contains("residual_max")) cfg.gates.residual_max = positive(g["residual_max"], "gates.residual_max");
    if (g.contains("compare_linf")) cfg.gates.compare_linf = positive(g["compare_linf"], "gates.compare_linf");
  }

  if (j.contains("verify")) {
    check_keys(j["verify"], "verify", {"h"});
    if (j["verify"].contains("h")) cfg.verify_h = positive(j["verify"]["h"], "verify.h");
  }

  if (j.contains("compare")) {
    const json& c = j["compare"];
    check_keys(c, "compare", {"a", "b", "region", "t", "hopf"});
    CompareSpec spec;
    if (!c.contains("a") || !c.contains("b")) fail("compare", "needs two sources a and b");
    spec.a = text(c["a"], "compare.a");
    spec.b = text(c["b"], "compare.b");
    for (const auto& [name, src] : {std::pair{"compare.a", spec.a}, std::pair{"compare.b", spec.b}}) {
      if (src.rfind("exact:", 0) == 0) {
        check_expression(src.substr(6), "x", n, name, true);
      } else if (src.rfind("grid:", 0) != 0 && src != "implicit" && src != "hopf" &&
                 src != "characteristics" && src != "lax-friedrichs") {
        fail(name, "unknown source \"" + src + "\"");
      }
    }
    if (!c.contains("region")) fail("compare.region", "required");
    spec.region = lattice(c["region"], "compare.region", n);
    if (!c.contains("t")) fail("compare.t", "required");
    spec.t = number(c["t"], "compare.t");
    if (c.contains("hopf")) {
      const json& h = c["hopf"];
      check_keys(h, "compare.hopf", {"lower", "upper", "counts", "extremum"});
      json lat = h;
      lat.erase("extremum");
      spec.hopf_lattice = lattice(lat, "compare.hopf", n);
      if (h.contains("extremum")) {
        const std::string e = text(h["extremum"], "compare.hopf.extremum");
        if (e == "min") spec.hopf_extremum = Extremum::Min;
        else if (e == "max") spec.hopf_extremum = Extremum::Max;
        else fail("compare.hopf.extremum", "expected min or max");
      }
    }
    cfg.compare = spec;
  }

  if (j.contains("lax_friedrichs")) {
    const json& l = j["lax_friedrichs"];
    check_keys(l, "lax_friedrichs", {"cfl", "sigma", "growth_limit"});
    if (l.contains("cfl")) {
      cfg.lax_friedrichs.cfl = number(l["cfl"], "lax_friedrichs.cfl");
      if (!(cfg.lax_friedrichs.cfl > 0.0 && cfg.lax_friedrichs.cfl < 1.0)) {
        fail("lax_friedrichs.cfl", "must lie in (0, 1)");
      }
    }
    if (l.contains("sigma")) {
      const Vec s = vector(l["sigma"], "lax_friedrichs.sigma", n);
      cfg.lax_friedrichs.sigma.assign(s.data(), s.data() + s.size());
      for (double v : cfg.lax_friedrichs.sigma) {
        if (!(v > 0.0)) fail("lax_friedrichs.sigma", "must be positive");
      }
    }
    if (l.contains("growth_limit")) {
      cfg.lax_friedrichs.growth_limit = positive(l["growth_limit"], "lax_friedrichs.growth_limit");
    }
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"directory", "formats"});
    if (o.contains("directory")) cfg.output.directory = text(o["directory"], "output.directory");
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) fail("output.formats", "expected a list");
      cfg.output.formats.clear();
      for (const auto& f : o["formats"]) {
        const std::string name = text(f, "output.formats");
        if (name != "csv" && name != "json" && name != "grid") {
          fail("output.formats", "unknown format \"" + name + "\" (csv, json, grid)");
        }
        cfg.output.formats.insert(name);
      }
    }
  }
  return cfg;
}

std::filesystem::path resolve(const RunConfig& cfg, const std::filesystem::path& p) {
  return p.is_absolute() ? p : cfg.base_dir / p;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::vector<std::string>& overrides, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                          ": parse error: " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j, base_dir);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path(), overrides,
                      path.string());
}

FieldPtr build_initial_data(const RunConfig& cfg) {
  if (!cfg.initial_data) throw ValidationError("field 'initial_data': required for this command");
  return make_expression_field(cfg.initial_data->expression, cfg.setup.n, "x");
}

GridField sample_initial_data(const RunConfig& cfg) {
  const FieldPtr g = build_initial_data(cfg);
  return GridField::sample(cfg.initial_data->primal, [&](const Vec& p) { return g->value(p); });
}

Lattice dual_lattice(const RunConfig& cfg, const GridField& g) {
  const InitialDataSpec& d = *cfg.initial_data;
  const Box b = d.dual_box ? *d.dual_box : default_dual_box(g);
  return Lattice(b, d.dual_counts.empty() ? d.primal.counts : d.dual_counts);
}

FieldPtr build_phi(const RunConfig& cfg) {
  const std::size_t n = cfg.setup.n;
  switch (cfg.phi.kind) {
    case PhiSpec::Kind::Expression:
      return make_expression_field(cfg.phi.expression, n, "y");
    case PhiSpec::Kind::Builtin:
      if (cfg.phi.builtin == "zero") return make_zero_field(n);
      if (cfg.phi.builtin == "quadratic") return make_quadratic_field(n, cfg.phi.parameter);
      return make_quartic_field(n, cfg.phi.parameter);
    case PhiSpec::Kind::Grid: {
      GridField grid = read_grid(resolve(cfg, cfg.phi.grid));
      if (grid.dim() != n) fail("phi.grid", "grid dimension does not match dimension");
      return make_grid_field(std::move(grid));
    }
    case PhiSpec::Kind::FromInitialData: {
      const GridField g = sample_initial_data(cfg);
      return make_grid_field(phi_from_initial_data(g, dual_lattice(cfg, g)));
    }
    case PhiSpec::Kind::None:
      break;
  }
  throw ValidationError("field 'phi': this command needs a Phi source (phi or initial_data.derive_phi)");
}

}  // namespace hodohj::cli
