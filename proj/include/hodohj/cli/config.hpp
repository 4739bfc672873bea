#pragma once

#include "hodohj/grid.hpp"
#include "hodohj/hjcore.hpp"
#include "hodohj/oracles.hpp"
#include "hodohj/solver.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hodohj::cli {

inline constexpr int kSchemaVersion = 1;

/// Where Phi comes from. Exactly one source is resolvable per run.
struct PhiSpec {
  enum class Kind { None, Expression, Builtin, Grid, FromInitialData };
  Kind kind = Kind::None;
  std::string expression;         ///< over y1..yn
  std::string builtin;            ///< zero, quadratic, quartic
  double parameter = 1.0;         ///< alpha for quadratic, coef for quartic
  std::filesystem::path grid;     ///< GridField binary file
};

/// Initial data g(x) = u(x, 0), sampled on `primal` when a grid is needed.
struct InitialDataSpec {
  std::string expression;  ///< over x1..xn
  Lattice primal;
  std::optional<Box> dual_box;  ///< defaults to the padded gradient range
  std::vector<std::size_t> dual_counts;
  bool derive_phi = false;
};

struct PlaneWaveSpec {
  Vec b;
  double c = 0.0;
};

/// Either scattered (x, t) points or a space lattice crossed with a time list.
struct QuerySpec {
  std::vector<Vec> x;
  std::vector<double> t;
  std::optional<Lattice> grid;
  std::vector<double> times;
  std::size_t size() const { return grid ? grid->size() * times.size() : x.size(); }
};

struct Gates {
  std::optional<double> residual_max;
  std::optional<double> compare_linf;
};

/// Sources: implicit, hopf, characteristics, lax-friedrichs, exact:<expr in
/// x1..xn and t>, grid:<path>.
struct CompareSpec {
  std::string a;
  std::string b;
  Lattice region;
  double t = 0.0;
  std::optional<Lattice> hopf_lattice;  ///< defaults to the multistart box, 201 per axis
  Extremum hopf_extremum = Extremum::Max;
};

struct OutputSpec {
  std::filesystem::path directory = ".";
  std::set<std::string> formats{"csv", "json"};
};

struct RunConfig {
  std::filesystem::path base_dir;  ///< relative file paths resolve here
  std::string convention;          ///< preset name, or empty for an explicit lambda
  HJSetup setup;
  PhiSpec phi;
  std::optional<InitialDataSpec> initial_data;
  std::optional<PlaneWaveSpec> plane_wave;
  QuerySpec query;
  SolveOptions solver;
  Gates gates;
  double verify_h = 1e-3;
  std::optional<CompareSpec> compare;
  LaxFriedrichsOptions lax_friedrichs;
  OutputSpec output;
};

/// Parses and validates a JSON config. `overrides` are dotted key=value
/// assignments applied before validation; values parse as JSON when they can
/// and as strings otherwise. Errors are ValidationError; parse errors carry
/// the line number, field errors name the field.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".",
                       const std::vector<std::string>& overrides = {},
                       const std::string& origin = "config");

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

/// Phi for the implicit solution. Throws ValidationError when the config has
/// no Phi source (plane-wave runs).
FieldPtr build_phi(const RunConfig& cfg);
FieldPtr build_initial_data(const RunConfig& cfg);
/// Initial data sampled on its primal lattice.
GridField sample_initial_data(const RunConfig& cfg);
/// Dual lattice for the conjugate: configured box and counts, else the padded
/// gradient range with the primal counts.
Lattice dual_lattice(const RunConfig& cfg, const GridField& g);

}  // namespace hodohj::cli
