#include "hodohj/grid.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hodohj {

namespace {

constexpr std::array<char, 12> kMagic = {'H', 'O', 'D', 'O', 'H', 'J', 'G', 'R', 'I', 'D', 0, 0};

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!is) throw ValidationError("grid file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

class GridScalarField final : public ScalarField {
 public:
  explicit GridScalarField(GridField g) : grid_(std::move(g)) { grid_.validate(); }

  std::size_t dim() const override { return grid_.dim(); }
  double value(const Vec& p) const override { return grid_.interpolate(p); }

  Jet jet(const Vec& p) const override {
    const std::size_t n = dim();
    const auto m = static_cast<Eigen::Index>(n);
    // Keep the stencil inside the box.
    Vec c = p;
    Vec h(m);
    for (std::size_t a = 0; a < n; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      h[ia] = grid_.lattice.spacing(a);
      const double lo = grid_.lattice.box.lower[ia];
      const double hi = grid_.lattice.box.upper[ia];
      if (p[ia] < lo || p[ia] > hi) {
        throw DomainError("point outside sampled grid box on axis " + std::to_string(a));
      }
      if (grid_.lattice.counts[a] >= 3) c[ia] = std::clamp(p[ia], lo + h[ia], hi - h[ia]);
    }
    auto f = [&](const Vec& q) { return grid_.interpolate(q); };

    Jet j;
    j.value = f(p);
    j.gradient = Vec::Zero(m);
    j.hessian = Mat::Zero(m, m);
    const double fc = f(c);
    for (Eigen::Index a = 0; a < m; ++a) {
      Vec up = c, dn = c;
      if (grid_.lattice.counts[static_cast<std::size_t>(a)] < 3) {
        // Two samples: linear along this axis.
        up[a] = grid_.lattice.box.upper[a];
        dn[a] = grid_.lattice.box.lower[a];
        j.gradient[a] = (f(up) - f(dn)) / (up[a] - dn[a]);
        continue;
      }
      up[a] += h[a];
      dn[a] -= h[a];
      const double fu = f(up), fd = f(dn);
      j.gradient[a] = (fu - fd) / (2.0 * h[a]);
      j.hessian(a, a) = (fu - 2.0 * fc + fd) / (h[a] * h[a]);
    }
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a + 1; b < m; ++b) {
        if (grid_.lattice.counts[static_cast<std::size_t>(a)] < 3 ||
            grid_.lattice.counts[static_cast<std::size_t>(b)] < 3) {
          continue;
        }
        auto shifted = [&](double sa, double sb) {
          Vec q = c;
          q[a] += sa * h[a];
          q[b] += sb * h[b];
          return f(q);
        };
        const double v =
            (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4.0 * h[a] * h[b]);
        j.hessian(a, b) = v;
        j.hessian(b, a) = v;
      }
    }
    return j;
  }

  std::string describe() const override { return "grid"; }

 private:
  GridField grid_;
};

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Lattice::Lattice(Box b, std::vector<std::size_t> c) : box(std::move(b)), counts(std::move(c)) {}

Lattice Lattice::cube(std::size_t n, double lower, double upper, std::size_t count) {
  const auto m = static_cast<Eigen::Index>(n);
  return Lattice({Vec::Constant(m, lower), Vec::Constant(m, upper)},
                 std::vector<std::size_t>(n, count));
}

std::size_t Lattice::size() const {
  std::size_t s = 1;
  for (auto c : counts) s *= c;
  return counts.empty() ? 0 : s;
}

double Lattice::spacing(std::size_t axis) const {
  const auto a = static_cast<Eigen::Index>(axis);
  if (counts[axis] < 2) return 0.0;
  return (box.upper[a] - box.lower[a]) / static_cast<double>(counts[axis] - 1);
}

double Lattice::coordinate(std::size_t axis, std::size_t i) const {
  const auto a = static_cast<Eigen::Index>(axis);
  if (counts[axis] < 2) return box.lower[a];
  if (i + 1 == counts[axis]) return box.upper[a];
  return box.lower[a] + static_cast<double>(i) * spacing(axis);
}

std::vector<std::size_t> Lattice::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(counts.size());
  for (std::size_t a = counts.size(); a-- > 0;) {
    idx[a] = flat % counts[a];
    flat /= counts[a];
  }
  return idx;
}

std::size_t Lattice::flatten(const std::vector<std::size_t>& index) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < counts.size(); ++a) flat = flat * counts[a] + index[a];
  return flat;
}

Vec Lattice::point(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vec p(static_cast<Eigen::Index>(dim()));
  for (std::size_t a = 0; a < dim(); ++a) p[static_cast<Eigen::Index>(a)] = coordinate(a, idx[a]);
  return p;
}

std::vector<Vec> Lattice::points() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

void Lattice::validate() const {
  if (counts.empty()) throw ValidationError("lattice has no axes");
  if (box.lower.size() != static_cast<Eigen::Index>(counts.size()) ||
      box.upper.size() != static_cast<Eigen::Index>(counts.size())) {
    throw ValidationError("lattice bounds do not match its dimension");
  }
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    if (counts[a] < 2) throw ValidationError("lattice needs at least 2 samples per axis");
    if (!(box.lower[ia] < box.upper[ia]) || !std::isfinite(box.lower[ia]) ||
        !std::isfinite(box.upper[ia])) {
      throw ValidationError("degenerate lattice box on axis " + std::to_string(a));
    }
  }
}

GridField::GridField(Lattice l, std::vector<double> v) : lattice(std::move(l)), values(std::move(v)) {
  validate();
}

GridField GridField::sample(const Lattice& lattice, const SampleSource& f) {
  lattice.validate();
  std::vector<double> v(lattice.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(lattice.point(i));
  return GridField(lattice, std::move(v));
}

void GridField::validate() const {
  lattice.validate();
  if (values.size() != lattice.size()) throw ValidationError("grid value count mismatch");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("grid contains non-finite values");
  }
}

double GridField::interpolate(const Vec& p) const {
  const std::size_t n = dim();
  if (static_cast<std::size_t>(p.size()) != n) throw ValidationError("point dimension mismatch");
  std::vector<std::size_t> base(n);
  std::vector<double> frac(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    const double lo = lattice.box.lower[ia];
    const double hi = lattice.box.upper[ia];
    if (!(p[ia] >= lo && p[ia] <= hi)) {
      throw DomainError("point outside sampled grid box on axis " + std::to_string(a));
    }
    const double s = (p[ia] - lo) / lattice.spacing(a);
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i + 1 >= lattice.counts[a]) i = lattice.counts[a] - 2;
    base[a] = i;
    frac[a] = s - static_cast<double>(i);
  }
  double acc = 0.0;
  std::vector<std::size_t> idx(n);
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
      const bool hi = (corner >> a) & 1u;
      idx[a] = base[a] + (hi ? 1 : 0);
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    if (w != 0.0) acc += w * at(idx);
  }
  return acc;
}

FieldPtr make_grid_field(GridField grid) { return std::make_shared<GridScalarField>(std::move(grid)); }

void write_grid(std::ostream& os, const GridField& g) {
  g.validate();
  os.write(kMagic.data(), kMagic.size());
  const std::uint32_t ver = kGridFormatVersion;
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((ver >> (8 * i)) & 0xffu));
  const std::size_t n = g.dim();
  put_u64(os, n);
  for (auto c : g.lattice.counts) put_u64(os, c);
  for (std::size_t a = 0; a < n; ++a) put_f64(os, g.lattice.box.lower[static_cast<Eigen::Index>(a)]);
  for (std::size_t a = 0; a < n; ++a) put_f64(os, g.lattice.box.upper[static_cast<Eigen::Index>(a)]);
  for (double v : g.values) put_f64(os, v);
  if (!os) throw Error("failed writing grid");
}

GridField read_grid(std::istream& is) {
  std::array<char, 12> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ValidationError("not a grid file (bad magic)");
  std::array<unsigned char, 4> vb{};
  is.read(reinterpret_cast<char*>(vb.data()), 4);
  const std::uint32_t ver = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (static_cast<std::uint32_t>(vb[3]) << 24);
  if (!is || ver != kGridFormatVersion) {
    throw ValidationError("unsupported grid format version " + std::to_string(ver));
  }
  const std::uint64_t n = get_u64(is);
  if (n == 0 || n > 16) throw ValidationError("invalid grid dimension");
  std::vector<std::size_t> counts(n);
  std::size_t total = 1;
  for (auto& c : counts) {
    c = get_u64(is);
    if (c < 2 || c > (std::size_t{1} << 32)) throw ValidationError("invalid grid count");
    total *= c;
  }
  Box box{Vec(static_cast<Eigen::Index>(n)), Vec(static_cast<Eigen::Index>(n))};
  for (std::size_t a = 0; a < n; ++a) box.lower[static_cast<Eigen::Index>(a)] = get_f64(is);
  for (std::size_t a = 0; a < n; ++a) box.upper[static_cast<Eigen::Index>(a)] = get_f64(is);
  std::vector<double> values(total);
  for (auto& v : values) v = get_f64(is);
  return GridField(Lattice(std::move(box), std::move(counts)), std::move(values));
}

void write_grid(const std::filesystem::path& path, const GridField& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_grid(os, g);
}

GridField read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open grid file " + path.string());
  return read_grid(is);
}

void write_grid_csv(std::ostream& os, const GridField& g) {
  const std::size_t n = g.dim();
  for (std::size_t a = 0; a < n; ++a) os << 'x' << (a + 1) << ',';
  os << "value\n";
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const Vec p = g.lattice.point(i);
    for (std::size_t a = 0; a < n; ++a) os << format_double(p[static_cast<Eigen::Index>(a)]) << ',';
    os << format_double(g.values[i]) << '\n';
  }
}

void write_grid_csv(const std::filesystem::path& path, const GridField& g) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_grid_csv(os, g);
}

}  // namespace hodohj
