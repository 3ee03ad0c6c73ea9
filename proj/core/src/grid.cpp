#include "sibucket/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sibucket/error.hpp"

namespace sibucket {

Grid::Grid(std::size_t nx, std::size_t ny, double width_x, double width_y)
    : nx_(nx), ny_(ny), width_x_(width_x), width_y_(width_y) {
  if (nx == 0 || ny == 0) {
    throw ParameterError("grid: nx and ny must be >= 1");
  }
  if (!(width_x > 0.0) || !(width_y > 0.0) || !std::isfinite(width_x) || !std::isfinite(width_y)) {
    throw ParameterError("grid: physical widths must be finite and positive");
  }
}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count()) {
    throw StructuralError("field: " + std::to_string(values_.size()) + " samples for a grid of " +
                          std::to_string(grid_.cell_count()) + " cells");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ParameterError("field: non-finite sample");
  }
}

Field Field::constant(const Grid& grid, double value) {
  return Field(grid, std::vector<double>(grid.cell_count(), value));
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

Field operator+(const Field& a, const Field& b) {
  require_same_grid(a.grid_, b.grid_, "field addition");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values_[i] + b.values_[i];
  return Field(a.grid_, std::move(out));
}

Field operator-(const Field& a, const Field& b) {
  require_same_grid(a.grid_, b.grid_, "field subtraction");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values_[i] - b.values_[i];
  return Field(a.grid_, std::move(out));
}

Field operator*(double s, const Field& f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * f.values_[i];
  return Field(f.grid_, std::move(out));
}

void require_same_grid(const Grid& a, const Grid& b, const char* context) {
  if (!(a == b)) throw StructuralError(std::string(context) + ": fields live on different grids");
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f[i] * g[i];
  return pairwise_sum(prod) / static_cast<double>(prod.size());
}

double norm(const Field& f) { return std::sqrt(inner(f, f)); }

double spatial_mean(const Field& f) { return pairwise_sum(f.values()) / static_cast<double>(f.size()); }

double integral(const Field& f) { return pairwise_sum(f.values()) * f.grid().cell_area(); }

Field linear_combination(std::span<const double> weights, std::span<const Field> fields) {
  if (weights.size() != fields.size() || fields.empty()) {
    throw StructuralError("linear_combination: weight/field count mismatch");
  }
  const Grid& grid = fields.front().grid();
  std::vector<double> out(grid.cell_count(), 0.0);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    require_same_grid(grid, fields[k].grid(), "linear_combination");
    const double w = weights[k];
    if (w == 0.0) continue;
    const auto v = fields[k].values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * v[i];
  }
  return Field(grid, std::move(out));
}

}  // namespace sibucket
