#include "sibucket/patterns.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sibucket/basis.hpp"
#include "sibucket/error.hpp"
#include "sibucket/rng.hpp"

namespace sibucket {

namespace {

// Stream identifiers for pattern construction, disjoint from trial streams.
constexpr std::uint64_t kPermutationStream = 0x5057414c53480001ull;

Field pixel_indicator(const Grid& grid, std::size_t k, std::size_t px, std::size_t py) {
  std::vector<double> v(grid.cell_count(), 0.0);
  for (std::size_t ix = px * k; ix < (px + 1) * k; ++ix) {
    for (std::size_t iy = py * k; iy < (py + 1) * k; ++iy) v[grid.index(ix, iy)] = 1.0;
  }
  return Field(grid, std::move(v));
}

std::vector<Field> pixel_fields(std::size_t L, double h, std::size_t k) {
  if (L == 0) throw ParameterError("pixel masks: L must be >= 1");
  if (!(h > 0.0)) throw ParameterError("pixel masks: pixel size h must be positive");
  if (k == 0) throw ParameterError("pixel masks: cells_per_pixel must be >= 1");
  const Grid grid(L * k, L * k, static_cast<double>(L) * h, static_cast<double>(L) * h);
  std::vector<Field> masks;
  masks.reserve(L * L);
  for (std::size_t px = 0; px < L; ++px) {
    for (std::size_t py = 0; py < L; ++py) masks.push_back(pixel_indicator(grid, k, px, py));
  }
  return masks;
}

// Harmonic factor f_l(t) for 1-based index l.
double harmonic_factor(std::size_t l, double t, double A) {
  if (l == 1) return 0.5;
  const double pi = std::numbers::pi;
  if (l % 2 == 0) return std::sin(pi * static_cast<double>(l) * t / A) / std::numbers::sqrt2;
  return std::cos(pi * static_cast<double>(l - 1) * t / A) / std::numbers::sqrt2;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::pixel: return "pixel";
    case Family::two_pixel: return "two-pixel";
    case Family::harmonic: return "harmonic";
    case Family::pseudo_random: return "pseudo-random";
    case Family::custom: return "custom";
  }
  return "custom";
}

Family parse_family(const std::string& name) {
  if (name == "pixel") return Family::pixel;
  if (name == "two-pixel" || name == "two_pixel") return Family::two_pixel;
  if (name == "harmonic") return Family::harmonic;
  if (name == "pseudo-random" || name == "pseudo_random") return Family::pseudo_random;
  if (name == "custom") return Family::custom;
  throw ParameterError("unknown pattern family '" + name + "'");
}

PatternSet::PatternSet(std::vector<Field> masks, double n_bar, Family family, FamilyParams params)
    : masks_(std::move(masks)), n_bar_(n_bar), family_(family), params_(params) {
  if (masks_.empty()) throw ParameterError("pattern set: at least one mask required");
  if (!(n_bar_ > 0.0) || !std::isfinite(n_bar_)) throw ParameterError("pattern set: n_bar must be positive");
  for (const auto& f : masks_) require_same_grid(masks_.front().grid(), f.grid(), "pattern set");
}

PatternSet PatternSet::with_n_bar(double n_bar) const { return PatternSet(masks_, n_bar, family_, params_); }

PatternSet pixel_masks(std::size_t L, double h, std::size_t cells_per_pixel, double n_bar) {
  FamilyParams params;
  params.L = L;
  params.h = h;
  params.cells_per_pixel = cells_per_pixel;
  return PatternSet(pixel_fields(L, h, cells_per_pixel), n_bar, Family::pixel, params);
}

PatternSet two_pixel_masks(std::size_t L, double h, std::size_t cells_per_pixel, double n_bar) {
  if (L % 2 == 0) {
    throw ParameterError("two-pixel masks: M = L^2 must be odd (the cyclic two-pixel system is singular for even M)");
  }
  const auto single = pixel_fields(L, h, cells_per_pixel);
  const std::size_t M = single.size();
  std::vector<Field> masks;
  masks.reserve(M);
  for (std::size_t m = 0; m < M; ++m) masks.push_back(single[m] + single[(m + 1) % M]);
  FamilyParams params;
  params.L = L;
  params.h = h;
  params.cells_per_pixel = cells_per_pixel;
  return PatternSet(std::move(masks), n_bar, Family::two_pixel, params);
}

PatternSet harmonic_masks(std::size_t L, double A, std::size_t cells_per_axis, double n_bar) {
  if (L == 0 || L % 2 == 0) {
    throw ParameterError("harmonic masks: L must be odd so that M = L^2 = 1 + 4M' (needed for sum V_m^2 = M)");
  }
  if (!(A > 0.0)) throw ParameterError("harmonic masks: A must be positive");
  const std::size_t n = cells_per_axis == 0 ? 4 * L : cells_per_axis;
  if (n < L) throw ParameterError("harmonic masks: cells_per_axis must be >= L");
  const Grid grid(n, n, A, A);

  // Tabulate the 1-D factors once per axis; coordinates are centred on 0.
  std::vector<std::vector<double>> factor(L + 1, std::vector<double>(n));
  for (std::size_t l = 1; l <= L; ++l) {
    for (std::size_t i = 0; i < n; ++i) factor[l][i] = harmonic_factor(l, grid.center_x(i) - 0.5 * A, A);
  }

  std::vector<Field> masks;
  masks.reserve(L * L);
  for (std::size_t mx = 1; mx <= L; ++mx) {
    for (std::size_t my = 1; my <= L; ++my) {
      std::vector<double> v(grid.cell_count());
      for (std::size_t ix = 0; ix < n; ++ix) {
        for (std::size_t iy = 0; iy < n; ++iy) v[grid.index(ix, iy)] = 0.5 + factor[mx][ix] * factor[my][iy];
      }
      masks.emplace_back(grid, std::move(v));
    }
  }
  FamilyParams params;
  params.L = L;
  params.A = A;
  params.cells_per_pixel = n;
  return PatternSet(std::move(masks), n_bar, Family::harmonic, params);
}

PatternSet pseudo_random_masks(std::size_t L, double t1, double kappa, std::uint64_t seed, std::size_t count,
                               double width, double n_bar) {
  if (!is_power_of_two(L)) throw ParameterError("pseudo-random masks: L must be a power of two");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw ParameterError("pseudo-random masks: kappa must be >= 1");
  if (!(t1 > 0.0 && t1 < 1.0)) throw ParameterError("pseudo-random masks: t1 must lie in (0, 1)");
  if (t1 * (1.0 + 1.0 / kappa) > 1.0 || t1 * (1.0 - 1.0 / kappa) < 0.0) {
    throw ParameterError("pseudo-random masks: t1 (1 +/- 1/kappa) must stay within [0, 1]");
  }
  if (!(width > 0.0)) throw ParameterError("pseudo-random masks: width must be positive");
  const std::size_t N = L * L;
  const std::size_t M = count == 0 ? N : count;
  if (M > N) throw ParameterError("pseudo-random masks: count must not exceed L^2");

  // Fisher-Yates over Hadamard rows 1..N-1, with a random sign per row.
  Stream rng(seed, kPermutationStream);
  std::vector<std::size_t> rows(N - 1);
  std::iota(rows.begin(), rows.end(), std::size_t{1});
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.below(i)]);
  std::vector<double> signs(rows.size());
  for (double& s : signs) s = (rng.next() >> 63) ? -1.0 : 1.0;

  const Grid grid(L, L, width, width);
  std::vector<Field> masks;
  masks.reserve(M);
  masks.push_back(Field::constant(grid, t1));
  const double lo = t1 * (1.0 - 1.0 / kappa);
  const double hi = t1 * (1.0 + 1.0 / kappa);
  for (std::size_t m = 1; m < M; ++m) {
    const std::size_t row = rows[m - 1];
    std::vector<double> v(N);
    for (std::size_t cell = 0; cell < N; ++cell) {
      const bool negative = (std::popcount(row & cell) % 2 == 1) != (signs[m - 1] < 0.0);
      v[cell] = negative ? lo : hi;
    }
    masks.emplace_back(grid, std::move(v));
  }
  FamilyParams params;
  params.L = L;
  params.t1 = t1;
  params.kappa = kappa;
  params.seed = seed;
  return PatternSet(std::move(masks), n_bar, Family::pseudo_random, params);
}

ValidationReport validate(const PatternSet& patterns, double tol, double rank_tol) {
  ValidationReport report;
  for (const auto& mask : patterns.masks()) {
    for (double v : mask.values()) {
      if (v < 0.0 || v > 1.0) ++report.bound_violations;
    }
    report.t_squared_values.push_back(inner(mask, mask));
    report.t_means.push_back(spatial_mean(mask));
  }
  report.bounds_ok = report.bound_violations == 0;
  if (!report.bounds_ok) {
    report.warnings.push_back(std::to_string(report.bound_violations) + " mask samples outside [0, 1]");
  }
  const auto [lo, hi] = std::minmax_element(report.t_squared_values.begin(), report.t_squared_values.end());
  report.t_squared_spread = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
  report.equal_t_squared = report.t_squared_spread <= tol;
  if (!report.equal_t_squared) {
    report.warnings.push_back("mask norms differ (relative spread " + std::to_string(report.t_squared_spread) + ")");
  }
  report.gram_rank = independence_rank(gram(patterns), rank_tol);
  if (report.gram_rank < patterns.size()) {
    report.warnings.push_back("masks are linearly dependent: rank " + std::to_string(report.gram_rank) + " of " +
                              std::to_string(patterns.size()));
  }
  return report;
}

}  // namespace sibucket
