#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace zeroflow {

/// Uniform periodic grid over `cells` unit cells with `points_per_cell`
/// nodes each. The domain is the circle of circumference `cells`.
struct GridSpec {
  int cells = 1;
  int points_per_cell = 8;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(cells) * static_cast<std::size_t>(points_per_cell);
  }
  [[nodiscard]] double dx() const { return 1.0 / points_per_cell; }
  [[nodiscard]] double circumference() const { return cells; }
  [[nodiscard]] double node(std::size_t j) const { return static_cast<double>(j) * dx(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Smallest admissible number of points per cell (the 5-point stencils need
/// at least this much room).
inline constexpr int kMinPointsPerCell = 8;

GridSpec make_grid(int cells, int points_per_cell);

/// Scalar profile sampled at the nodes x_j = j*dx of a periodic grid.
class Field {
 public:
  Field() = default;
  explicit Field(GridSpec grid);
  Field(GridSpec grid, std::vector<double> values);

  [[nodiscard]] const GridSpec& grid() const { return grid_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }

  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }

  /// Periodic access; any integer index is reduced modulo size().
  [[nodiscard]] double at(long long j) const;

  /// Value at an arbitrary x by linear interpolation between nodes.
  [[nodiscard]] double interpolate(double x) const;

  [[nodiscard]] double sup_norm() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend bool operator==(const Field&, const Field&) = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

Field sample(const std::function<double(double)>& f, GridSpec grid);

/// Centered 4th-order periodic first derivative.
Field derivative(const Field& u);

/// Su(x) = u(x - k): rotation by k*points_per_cell nodes.
Field shift_cell(const Field& u, int k);

/// Mean over the circle, i.e. the average of the per-cell integrals.
double mass(const Field& u);
std::vector<double> mass_per_cell(const Field& u);

/// Sup-norm of the difference, grids must match.
double sup_distance(const Field& u, const Field& v);

/// Repeat a profile periodically onto a grid with more cells.
Field tile(const Field& u, int cells);

/// CSV with header "x,value".
void write_csv(const Field& u, std::ostream& out);
void write_csv(const Field& u, const std::filesystem::path& path);

/// Little-endian binary: int32 cells, int32 points_per_cell, float64 values.
void write_binary(const Field& u, std::ostream& out);
Field read_binary(std::istream& in);

}  // namespace zeroflow
