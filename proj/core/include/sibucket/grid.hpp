#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sibucket {

/// Uniform rectangular discretization of the detector region.
///
/// Cells are indexed row-major with x outer and y inner:
/// `index(ix, iy) = ix * ny + iy`. Samples live at cell centres, measured
/// from the lower-left corner of the region.
class Grid {
 public:
  Grid(std::size_t nx, std::size_t ny, double width_x, double width_y);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t cell_count() const noexcept { return nx_ * ny_; }
  double width_x() const noexcept { return width_x_; }
  double width_y() const noexcept { return width_y_; }
  double dx() const noexcept { return width_x_ / static_cast<double>(nx_); }
  double dy() const noexcept { return width_y_ / static_cast<double>(ny_); }
  double area() const noexcept { return width_x_ * width_y_; }
  double cell_area() const noexcept { return area() / static_cast<double>(cell_count()); }

  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return ix * ny_ + iy; }
  std::size_t ix_of(std::size_t cell) const noexcept { return cell / ny_; }
  std::size_t iy_of(std::size_t cell) const noexcept { return cell % ny_; }
  double center_x(std::size_t ix) const noexcept { return (static_cast<double>(ix) + 0.5) * dx(); }
  double center_y(std::size_t iy) const noexcept { return (static_cast<double>(iy) + 0.5) * dy(); }

  /// Cell containing the midpoint of the region (upper cell on ties).
  std::size_t center_cell() const noexcept { return index(nx_ / 2, ny_ / 2); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t nx_;
  std::size_t ny_;
  double width_x_;
  double width_y_;
};

/// Real function sampled at the cell centres of a Grid. Immutable.
class Field {
 public:
  /// Throws StructuralError on length mismatch and ParameterError on
  /// non-finite samples.
  Field(const Grid& grid, std::vector<double> values);

  static Field constant(const Grid& grid, double value);
  static Field zeros(const Grid& grid) { return constant(grid, 0.0); }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t cell) const noexcept { return values_[cell]; }
  double at(std::size_t ix, std::size_t iy) const noexcept { return values_[grid_.index(ix, iy)]; }

  double min() const;
  double max() const;

  friend Field operator+(const Field& a, const Field& b);
  friend Field operator-(const Field& a, const Field& b);
  friend Field operator*(double s, const Field& f);

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Scalar product: spatial average of f*g over the region.
double inner(const Field& f, const Field& g);
double norm(const Field& f);
double spatial_mean(const Field& f);

/// Sum of f over cells weighted by cell area (the integral of f).
double integral(const Field& f);

/// Throws StructuralError unless both fields live on the same grid.
void require_same_grid(const Grid& a, const Grid& b, const char* context);

/// Pairwise summation; order is fixed by the input, not by scheduling.
double pairwise_sum(std::span<const double> values);

/// `sum_k weights[k] * fields[k]`, all fields on one grid.
Field linear_combination(std::span<const double> weights, std::span<const Field> fields);

}  // namespace sibucket
