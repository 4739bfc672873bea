#pragma once

#include "hodohj/scalar_field.hpp"
#include "hodohj/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hodohj {

/// Axis-aligned box [lower, upper].
struct Box {
  Vec lower;
  Vec upper;

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
};

/// Uniform tensor-product lattice over a box, row-major (last axis fastest).
struct Lattice {
  Box box;
  std::vector<std::size_t> counts;

  Lattice() = default;
  Lattice(Box b, std::vector<std::size_t> c);

  /// Same box and count on every axis.
  static Lattice cube(std::size_t n, double lower, double upper, std::size_t count);

  std::size_t dim() const { return counts.size(); }
  std::size_t size() const;
  double spacing(std::size_t axis) const;
  double coordinate(std::size_t axis, std::size_t i) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<std::size_t>& index) const;
  Vec point(std::size_t flat) const;
  std::vector<Vec> points() const;

  /// Throws ValidationError unless counts >= 2 and lower < upper on every axis.
  void validate() const;
};

/// Uniformly sampled field over a box.
struct GridField {
  Lattice lattice;
  std::vector<double> values;

  GridField() = default;
  GridField(Lattice l, std::vector<double> v);

  static GridField sample(const Lattice& lattice, const SampleSource& f);

  std::size_t dim() const { return lattice.dim(); }
  double at(const std::vector<std::size_t>& index) const { return values[lattice.flatten(index)]; }

  /// Multilinear interpolation; DomainError outside the box.
  double interpolate(const Vec& p) const;

  void validate() const;
};

/// Multilinear values, central-difference derivatives with one-grid-spacing steps.
FieldPtr make_grid_field(GridField grid);

// Binary container: 16-byte header ("HODOHJGRID" padded to 12 bytes + uint32
// version), then int64 n, int64 counts[n], f64 lower[n], f64 upper[n],
// f64 values[...], everything little-endian.
inline constexpr std::uint32_t kGridFormatVersion = 1;

void write_grid(std::ostream& os, const GridField& g);
GridField read_grid(std::istream& is);
void write_grid(const std::filesystem::path& path, const GridField& g);
GridField read_grid(const std::filesystem::path& path);

/// One row per sample: coordinates then value, 17 significant digits.
void write_grid_csv(std::ostream& os, const GridField& g);
void write_grid_csv(const std::filesystem::path& path, const GridField& g);

/// printf("%.17g")
std::string format_double(double v);

}  // namespace hodohj
