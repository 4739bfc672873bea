#include "doctest.h"

#include "hodohj/cli/commands.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace hodohj;
using namespace hodohj::cli;
using json = nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hodohj_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

const char* kFree = R"({
  "convention": "paper-sol",
  "dimension": 1,
  "phi": {"builtin": "zero"},
  "query": {"points": [[2, 1], [-1.5, 0.75], [0.25, 3]]},
  "gates": {"residual_max": 1e-4}
})";

const char* kRankMap = R"({
  "convention": "paper-sol",
  "dimension": 1,
  "phi": "y1^2/2",
  "query": {"grid": {"lower": -1, "upper": 1, "counts": 21}, "times": [0.5, 1.0, 1.5]}
})";

int quiet_dispatch(const std::string& command, const RunConfig& cfg, const fs::path& out,
                   std::size_t workers = 1) {
  std::ostringstream err;
  return dispatch(command, cfg, {out, workers}, err);
}

}  // namespace

TEST_CASE("load_config examples") {
  const RunConfig ok = parse_config(R"({"convention": "paper-sol", "phi": "y1^2/2", "dimension": 1})");
  CHECK(ok.setup.lambda == 0.5);
  CHECK(ok.setup.n == 1);
  CHECK(ok.phi.kind == PhiSpec::Kind::Expression);

  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 0, "phi": "y1", "dimension": 1})"),
                       doctest::Contains("lambda must be nonzero"), ValidationError);

  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1, "dimension": 1, "phi": "y1^2",
                                        "initial_data": {"expression": "x1^2/2"}})"),
                       doctest::Contains("conflicts with phi"), ValidationError);

  const RunConfig derived = parse_config(R"({"lambda": 0.5, "dimension": 1,
      "initial_data": {"expression": "x1^2/2", "derive_phi": true}})");
  CHECK(derived.phi.kind == PhiSpec::Kind::FromInitialData);
}

TEST_CASE("config errors name the field or the line") {
  CHECK_THROWS_WITH_AS(parse_config("{\n  \"dimension\": 1,\n  \"lambda\": ,\n}"),
                       doctest::Contains("config:3:"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1, "dimension": 1, "phi": "y2"})"),
                       doctest::Contains("field 'phi'"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1, "dimension": 1, "solver": {"damping": 2}})"),
                       doctest::Contains("solver.damping"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1, "dimension": 1, "solver": {"tol": 2}})"),
                       doctest::Contains("solver.tol"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1})"), doctest::Contains("dimension"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"lambda": 1, "dimension": 1, "query": {"grid": {"lower": 0, "upper": 1, "counts": 3}, "times": [2, 1]}})"),
      doctest::Contains("query.times"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lambda": 1, "dimension": 2, "query": {"points": [[1, 2]]}})"),
                       doctest::Contains("query.points[0]"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"convention": "paper-sol", "lambda": 1, "dimension": 1})"),
                  ValidationError);
}

TEST_CASE("overrides apply before validation") {
  const RunConfig cfg = parse_config(kFree, ".", {"solver.newton_tol=1e-12", "phi=y1^4/4", "dimension=1"});
  CHECK(cfg.solver.newton_tol == 1e-12);
  CHECK(cfg.phi.kind == PhiSpec::Kind::Expression);
  CHECK(cfg.phi.expression == "y1^4/4");
  CHECK_THROWS_AS(parse_config(kFree, ".", {"novalue"}), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config(kFree, ".", {"convention=other"}), doctest::Contains("convention"),
                       ValidationError);
}

TEST_CASE("solve writes the closed-form row") {
  const fs::path dir = scratch("solve");
  REQUIRE(quiet_dispatch("solve", parse_config(kFree), dir) == kExitOk);
  const auto rows = csv_rows(slurp(dir / "solve.csv"));
  REQUIRE(rows.size() == 4);  // header + one row per query
  const auto& h = rows[0];
  CHECK(std::stod(rows[1][column(h, "u")]) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::stod(rows[1][column(h, "y1")]) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[1][column(h, "rank")] == "1");
  CHECK(rows[1][column(h, "branch_count")] == "1");
  CHECK(rows[1][column(h, "status")] == "ok");
}

TEST_CASE("report JSON round trips with finite numbers") {
  const fs::path dir = scratch("report");
  REQUIRE(quiet_dispatch("solve", parse_config(kFree), dir) == kExitOk);
  const json r = json::parse(slurp(dir / "solve.json"));
  CHECK(r["schema_version"] == kSchemaVersion);
  CHECK(r["points"].size() == 3);
  std::function<void(const json&)> finite = [&](const json& j) {
    if (j.is_number()) CHECK(std::isfinite(j.get<double>()));
    if (j.is_structured())
      for (const auto& e : j) finite(e);
  };
  finite(r);
  CHECK(json::parse(r.dump()) == r);
}

TEST_CASE("verify passes its residual gate and fails a tight one") {
  const fs::path dir = scratch("verify");
  CHECK(quiet_dispatch("verify", parse_config(kFree), dir) == kExitOk);
  const json r = json::parse(slurp(dir / "verify.json"));
  CHECK(r["gates"]["residual_max"]["pass"] == true);
  CHECK(quiet_dispatch("verify", parse_config(kFree, ".", {"gates.residual_max=1e-14"}), dir) ==
        kExitGateFailed);
}

TEST_CASE("rank-map flags the caustic at t = alpha") {
  const fs::path dir = scratch("rankmap");
  REQUIRE(quiet_dispatch("rank-map", parse_config(kRankMap), dir) == kExitOk);
  const json r = json::parse(slurp(dir / "rank-map.json"));
  CHECK(r["caustic_times"] == json::array({1.0}));
  CHECK(r["caustics"].size() == 21);
  const auto rows = csv_rows(slurp(dir / "rank-map.csv"));
  CHECK(rows.size() == 1 + 63);
  const auto& h = rows[0];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t = std::stod(rows[i][column(h, "t")]);
    CHECK(rows[i][column(h, "caustic")] == (t == 1.0 ? "1" : "0"));
    if (t != 1.0) CHECK(rows[i][column(h, "rank")] == "1");
  }
}

TEST_CASE("rank-map on a plane wave reports rank zero") {
  const fs::path dir = scratch("plane");
  const RunConfig cfg = parse_config(R"({"convention": "paper-eq1", "dimension": 2,
      "plane_wave": {"b": [1.5, -0.5], "c": 2},
      "query": {"grid": {"lower": -1, "upper": 1, "counts": 5}, "times": [0, 1]},
      "verify": {"h": 0.25}})");
  REQUIRE(quiet_dispatch("rank-map", cfg, dir) == kExitOk);
  const json r = json::parse(slurp(dir / "rank-map.json"));
  CHECK(r["rank_histogram"] == json{{"0", 50}});
  CHECK(r["plane_wave"]["max_residual"].get<double>() <= 1e-12);
}

TEST_CASE("transform reproduces H from both sides") {
  const fs::path dir = scratch("transform");
  const RunConfig cfg = parse_config(R"({"convention": "paper-sol", "dimension": 2,
      "phi": {"builtin": "quadratic", "alpha": -1},
      "query": {"points": [[0.5, -0.25, 0.5], [1, 1, 2]]}})");
  REQUIRE(quiet_dispatch("transform", cfg, dir) == kExitOk);
  const json r = json::parse(slurp(dir / "transform.json"));
  CHECK(r["summary"]["max_H_mismatch"].get<double>() <= 1e-12);
  CHECK(r["summary"]["max_inverse_error"].get<double>() <= 1e-12);
  CHECK(r["summary"]["max_transformed_residual"].get<double>() <= 1e-8);
}

TEST_CASE("conjugate writes Phi grids that read back") {
  const fs::path dir = scratch("conjugate");
  const RunConfig cfg = parse_config(R"({"lambda": 0.5, "dimension": 1,
      "initial_data": {"expression": "x1^2/2", "box": {"lower": -2, "upper": 2}, "counts": 101,
                       "dual_box": {"lower": -1, "upper": 1}, "dual_counts": 41},
      "output": {"formats": ["grid", "csv", "json"]}})");
  REQUIRE(quiet_dispatch("conjugate", cfg, dir) == kExitOk);
  const GridField phi = read_grid(dir / "phi.grid");
  REQUIRE(phi.values.size() == 41);
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    const double y = phi.lattice.coordinate(0, i);
    CHECK(std::abs(phi.values[i] + 0.5 * y * y) <= 0.5 * 0.04 * 0.04);
  }
  CHECK(fs::exists(dir / "conjugate.csv"));
}

TEST_CASE("compare gates against a closed form") {
  const fs::path dir = scratch("compare");
  const std::string cfg = R"cfg({"lambda": 0.5, "dimension": 1,
      "phi": {"builtin": "quadratic", "alpha": -1},
      "compare": {"a": "implicit", "b": "exact:x1^2/(2*(t+1))",
                  "region": {"lower": -1, "upper": 1, "counts": 11}, "t": 0.5},
      "gates": {"compare_linf": 1e-9}})cfg";
  CHECK(quiet_dispatch("compare", parse_config(cfg), dir) == kExitOk);
  CHECK(quiet_dispatch("compare", parse_config(cfg, ".", {"compare.b=exact:x1^2/3 + 0.1"}), dir) ==
        kExitGateFailed);
  CHECK(quiet_dispatch("compare", parse_config(cfg, ".", {"compare.b=hopf"}), dir) == kExitOk);
}

TEST_CASE("compare with initial-data oracles") {
  const fs::path dir = scratch("compare_oracles");
  const std::string cfg = R"({"lambda": 0.5, "dimension": 1,
      "initial_data": {"expression": "x1^2/2", "box": {"lower": -2, "upper": 2}, "counts": 401},
      "compare": {"a": "lax-friedrichs", "b": "characteristics",
                  "region": {"lower": -1, "upper": 1, "counts": 41}, "t": 0.5},
      "gates": {"compare_linf": 0.01}})";
  CHECK(quiet_dispatch("compare", parse_config(cfg), dir) == kExitOk);
  const json r = json::parse(slurp(dir / "compare.json"));
  CHECK(r["comparison"]["linf"].get<double>() > 0.0);
}

TEST_CASE("CSV is byte-identical across worker counts") {
  const fs::path a = scratch("workers1");
  const fs::path b = scratch("workers4");
  const RunConfig cfg = parse_config(R"({"convention": "paper-sol", "dimension": 1, "phi": "y1^4/4",
      "query": {"grid": {"lower": -1, "upper": 1, "counts": 41}, "times": [0.5, 1, 1.5]},
      "solver": {"branch_policy": "all"}})");
  REQUIRE(quiet_dispatch("rank-map", cfg, a, 1) == kExitOk);
  REQUIRE(quiet_dispatch("rank-map", cfg, b, 4) == kExitOk);
  CHECK(slurp(a / "rank-map.csv") == slurp(b / "rank-map.csv"));
  REQUIRE(quiet_dispatch("solve", cfg, a, 1) == kExitOk);
  REQUIRE(quiet_dispatch("solve", cfg, b, 4) == kExitOk);
  CHECK(slurp(a / "solve.csv") == slurp(b / "solve.csv"));
}

TEST_CASE("exit code contract") {
  const fs::path dir = scratch("exit");
  std::ostringstream out, err;
  CHECK(dispatch("nonsense", parse_config(kFree), {dir, 1}, err) == kExitInvalid);
  CHECK(err.str().find("unknown command") != std::string::npos);

  // Commands whose inputs are missing fail validation rather than crash.
  const RunConfig bare = parse_config(R"({"lambda": 1, "dimension": 1})");
  for (const auto& c : command_names()) {
    std::ostringstream e;
    CHECK(dispatch(c, bare, {dir, 1}, e) == kExitInvalid);
    CHECK_FALSE(e.str().empty());
  }

  spit(dir / "cfg.json", kFree);
  CHECK(run({"hodohj", "solve", "--config", (dir / "cfg.json").string(), "--out", dir.string()}, out, err) ==
        kExitOk);
  CHECK(run({"hodohj", "solve"}, out, err) == kExitInvalid);
  CHECK(run({"hodohj", "solve", "--config", (dir / "missing.json").string()}, out, err) == kExitInvalid);
  CHECK(run({"hodohj", "solve", "--config", (dir / "cfg.json").string(), "--workers", "0"}, out, err) ==
        kExitInvalid);
  CHECK(run({"hodohj", "--help"}, out, err) == kExitOk);
}

TEST_CASE("installed executable honours the contract") {
  const char* exe = std::getenv("HODOHJ_EXE");
  if (!exe) return;
  const fs::path dir = scratch("exe");
  spit(dir / "cfg.json", kFree);
  auto sh = [&](const std::string& args) {
    const std::string cmd = std::string("\"") + exe + "\" " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  const std::string base = "--config \"" + (dir / "cfg.json").string() + "\" --out \"" + dir.string() + "\"";
  CHECK(sh("solve " + base) == 0);
  CHECK(sh("verify " + base) == 0);
  CHECK(sh("verify " + base + " --override gates.residual_max=1e-15") == 3);
  CHECK(sh("solve " + base + " --override lambda=0") == 2);
  CHECK(sh("frobnicate " + base) == 2);
}
