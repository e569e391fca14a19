#include "zeroflow/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "zeroflow/errors.hpp"

namespace zeroflow {

GridSpec make_grid(int cells, int points_per_cell) {
  if (cells < 1) throw PreconditionError("grid needs at least one cell, got " + std::to_string(cells));
  if (points_per_cell < kMinPointsPerCell) {
    throw PreconditionError("resolution too small: points_per_cell = " + std::to_string(points_per_cell) +
                            " < " + std::to_string(kMinPointsPerCell));
  }
  return GridSpec{cells, points_per_cell};
}

Field::Field(GridSpec grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw PreconditionError("field has " + std::to_string(values_.size()) + " values, grid expects " +
                            std::to_string(grid_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw PreconditionError("field values must be finite");
  }
}

double Field::at(long long j) const {
  const auto n = static_cast<long long>(values_.size());
  long long r = j % n;
  if (r < 0) r += n;
  return values_[static_cast<std::size_t>(r)];
}

double Field::interpolate(double x) const {
  const double s = x / grid_.dx();
  const double base = std::floor(s);
  const double frac = s - base;
  const auto j = static_cast<long long>(base);
  if (frac == 0.0) return at(j);
  return (1.0 - frac) * at(j) + frac * at(j + 1);
}

double Field::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Field& Field::operator+=(const Field& other) {
  if (!(grid_ == other.grid_)) throw PreconditionError("grid mismatch in field addition");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (!(grid_ == other.grid_)) throw PreconditionError("grid mismatch in field subtraction");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field sample(const std::function<double(double)>& f, GridSpec grid) {
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = f(grid.node(j));
    if (!std::isfinite(values[j])) {
      throw PreconditionError("non-finite sample at x = " + std::to_string(grid.node(j)));
    }
  }
  return Field(grid, std::move(values));
}

Field derivative(const Field& u) {
  const auto n = static_cast<long long>(u.size());
  const double inv = 1.0 / (12.0 * u.grid().dx());
  Field du(u.grid());
  for (long long j = 0; j < n; ++j) {
    du[static_cast<std::size_t>(j)] =
        (8.0 * (u.at(j + 1) - u.at(j - 1)) - (u.at(j + 2) - u.at(j - 2))) * inv;
  }
  return du;
}

Field shift_cell(const Field& u, int k) {
  const auto n = static_cast<long long>(u.size());
  const long long offset = static_cast<long long>(k) * u.grid().points_per_cell;
  Field out(u.grid());
  for (long long j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = u.at(j - offset);
  return out;
}

// Trapezoid on each cell [c, c+1], summed relative to the cell's first node
// so that constant fields integrate exactly.
std::vector<double> mass_per_cell(const Field& u) {
  const auto& g = u.grid();
  std::vector<double> out(static_cast<std::size_t>(g.cells));
  const auto n = static_cast<long long>(g.points_per_cell);
  for (std::size_t c = 0; c < out.size(); ++c) {
    const long long first = static_cast<long long>(c) * n;
    const double ref = u.at(first);
    double s = 0.5 * (u.at(first + n) - ref);
    for (long long j = 1; j < n; ++j) s += u.at(first + j) - ref;
    out[c] = ref + s * g.dx();
  }
  return out;
}

double mass(const Field& u) {
  if (u.size() == 0) return 0.0;
  const double ref = u[0];
  double s = 0.0;
  for (double v : u.values()) s += v - ref;
  return ref + s / static_cast<double>(u.size());
}

double sup_distance(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid())) throw PreconditionError("grid mismatch in sup_distance");
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) m = std::max(m, std::abs(u[j] - v[j]));
  return m;
}

Field tile(const Field& u, int cells) {
  const auto& g = u.grid();
  if (cells % g.cells != 0) {
    throw PreconditionError("cannot tile " + std::to_string(g.cells) + " cells onto " + std::to_string(cells));
  }
  Field out(GridSpec{cells, g.points_per_cell});
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = u[j % u.size()];
  return out;
}

void write_csv(const Field& u, std::ostream& out) {
  out << "x,value\n";
  out.precision(17);
  for (std::size_t j = 0; j < u.size(); ++j) out << u.grid().node(j) << ',' << u[j] << '\n';
}

void write_csv(const Field& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_csv(u, out);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("truncated field checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_binary(const Field& u, std::ostream& out) {
  put_le<std::int32_t>(out, u.grid().cells);
  put_le<std::int32_t>(out, u.grid().points_per_cell);
  for (double v : u.values()) put_le<double>(out, v);
}

Field read_binary(std::istream& in) {
  const auto cells = get_le<std::int32_t>(in);
  const auto n = get_le<std::int32_t>(in);
  const GridSpec grid = make_grid(cells, n);
  std::vector<double> values(grid.size());
  for (double& v : values) v = get_le<double>(in);
  return Field(grid, std::move(values));
}

}  // namespace zeroflow
