#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sibucket/grid.hpp"

namespace sibucket {

enum class Family { pixel, two_pixel, harmonic, pseudo_random, custom };

std::string to_string(Family family);
/// Accepts the CLI spellings: pixel, two-pixel, harmonic, pseudo-random, custom.
Family parse_family(const std::string& name);

/// Source photometry. The mean number of photons per exposure is
/// n_bar = efficiency * intensity * area.
struct Photometry {
  double efficiency = 1.0;  ///< detected photons per joule
  double intensity = 1.0;   ///< incident fluence, J/m^2
  double area = 1.0;        ///< detector region area, m^2

  double photons_per_exposure() const { return efficiency * intensity * area; }
};

/// Construction parameters echoed into manifests. Unused members stay unset.
struct FamilyParams {
  std::optional<std::size_t> L;
  std::optional<double> h;
  std::optional<double> A;
  std::optional<double> t1;
  std::optional<double> kappa;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cells_per_pixel;
};

/// Ordered mask transmissions T_m plus the photon budget n_bar; the
/// illumination vectors are W_m = n_bar * T_m.
class PatternSet {
 public:
  /// Masks must be non-empty and share one grid; n_bar must be positive.
  /// Bounds 0 <= T <= 1 are not enforced here (see validate()).
  PatternSet(std::vector<Field> masks, double n_bar, Family family = Family::custom, FamilyParams params = {});

  std::size_t size() const noexcept { return masks_.size(); }
  const Grid& grid() const noexcept { return masks_.front().grid(); }
  const Field& mask(std::size_t m) const { return masks_.at(m); }
  const std::vector<Field>& masks() const noexcept { return masks_; }
  double n_bar() const noexcept { return n_bar_; }
  Family family() const noexcept { return family_; }
  const FamilyParams& params() const noexcept { return params_; }

  /// W_m = n_bar * T_m.
  Field illumination(std::size_t m) const { return n_bar_ * masks_.at(m); }
  /// Same masks with a different photon budget.
  PatternSet with_n_bar(double n_bar) const;

 private:
  std::vector<Field> masks_;
  double n_bar_;
  Family family_;
  FamilyParams params_;
};

/// Single-pixel indicator masks on an L x L pixel array with pixel side h.
/// Each pixel is sampled by cells_per_pixel^2 grid cells. M = L^2, and
/// m = (m_x - 1) L + m_y matches the grid's row-major cell order.
PatternSet pixel_masks(std::size_t L, double h, std::size_t cells_per_pixel = 1, double n_bar = 1.0);

/// Overlapping masks T_m + T_{m+1} with cyclic index over the pixel set.
/// Requires M = L^2 odd (ParameterError otherwise).
PatternSet two_pixel_masks(std::size_t L, double h = 1.0, std::size_t cells_per_pixel = 1, double n_bar = 1.0);

/// Harmonic masks T_m = 1/2 + f_{m_x}(x) f_{m_y}(y) on (-A/2, A/2)^2 with
/// f_1 = 1/2, f_even(t) = sin(pi l t / A)/sqrt2, f_odd(t) = cos(pi (l-1) t / A)/sqrt2.
/// L must be odd; cells_per_axis defaults to 4L and must be at least L
/// (sampled trigonometric orthogonality is exact below the sampling rate).
PatternSet harmonic_masks(std::size_t L, double A, std::size_t cells_per_axis = 0, double n_bar = 1.0);

/// Two-level pseudo-random masks: T_1 = t1 and T_m = t1 (1 + B_m / kappa),
/// where B_m are rows of a Sylvester Walsh-Hadamard matrix of order L^2,
/// permuted and sign-flipped from `seed`, with the all-ones row excluded.
/// The grid is L x L cells over a width x width square. `count` (default
/// L^2) keeps the first count - 1 permuted rows. L must be a power of two and
/// t1 (1 +/- 1/kappa) must lie in [0, 1].
PatternSet pseudo_random_masks(std::size_t L, double t1, double kappa, std::uint64_t seed,
                               std::size_t count = 0, double width = 1.0, double n_bar = 1.0);

struct ValidationReport {
  bool bounds_ok = true;
  std::size_t bound_violations = 0;
  std::vector<double> t_squared_values;  ///< norm(T_m)^2
  std::vector<double> t_means;           ///< spatial_mean(T_m)
  bool equal_t_squared = true;
  double t_squared_spread = 0.0;  ///< (max - min) / max of t_squared_values
  std::size_t gram_rank = 0;
  std::vector<std::string> warnings;
};

/// Report-only checks: mask bounds, norm^2 spread (relative tolerance `tol`),
/// and Gram rank at relative tolerance `rank_tol`.
ValidationReport validate(const PatternSet& patterns, double tol = 1e-10, double rank_tol = 1e-10);

}  // namespace sibucket
