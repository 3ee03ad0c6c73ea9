#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sibucket/basis.hpp"
#include "sibucket/sim.hpp"

namespace sibucket {

// ---------------------------------------------------------------------------
// Width functionals
// ---------------------------------------------------------------------------

struct Width {
  double value = 0.0;
  /// Set when the integral of g vanishes (e.g. zero-mean lobed fields).
  bool degenerate = false;
};

/// Integral of g over the root of the integral of g^2. For 2-D fields the
/// result has units of length: an h x h indicator gives h, whose square is
/// the "effective pixel" area compared against |region| / M.
/// Throws ParameterError when g is identically zero.
Width width_delta2(const Field& g);

enum class Axis { x, y };
/// 1-D variant on the axial profile p obtained by integrating out the other
/// axis: (integral of p)^2 / integral of p^2, a length (w for a box of width w).
Width width_delta2_axis(const Field& g, Axis axis);

/// Root of the centroid-referenced second moment of |g|, treating g as
/// piecewise constant over cells (each cell adds (dx^2 + dy^2) / 12).
/// Throws ParameterError when |g| has zero mass.
double width_variance(const Field& g);

/// 3 sqrt(pi) / 2: width_delta2 <= kWidthRatioBound * width_variance.
inline constexpr double kWidthRatioBound = 2.6586807763582730;

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

struct ResolutionMap {
  Field resolution;  ///< (|region| / f_M(r))^{1/2}
  Field f_m;         ///< f_M(r) = sum_m V_m(r)^2
  double f_mean = 0.0;
};

/// Pointwise width of the Green's function. Requires Condition 1
/// (ConditionError otherwise).
ResolutionMap resolution_map(const BasisBundle& bundle, double cond1_tol = 1e-9);

struct UniformResolution {
  double value = 0.0;      ///< (|region| / M)^{1/2}
  double psf_width = 0.0;  ///< width_delta2 of the PSF
  double rel_diff = 0.0;
};

/// Requires Condition 2 under `shifts` (ConditionError otherwise).
UniformResolution resolution_uniform(const BasisBundle& bundle, std::span<const LatticeShift> shifts,
                                     double tol = 1e-9);
UniformResolution resolution_uniform(const BasisBundle& bundle, double tol = 1e-9);

/// Average width of the measurement kernel A_M. Requires Condition 1.
double resolution_measurement(const PatternSet& patterns, const BasisBundle& bundle, double cond1_tol = 1e-9);

// ---------------------------------------------------------------------------
// SNR and IQC
// ---------------------------------------------------------------------------

struct SnrMap {
  Field snr;               ///< (N_bar/M)^{1/2} F(r); 0 where undefined
  Field form_factor;       ///< F(r); 0 where undefined
  std::vector<bool> defined;
  std::size_t undefined_count = 0;
};

/// Shot-noise SNR of the reconstruction at each cell, using S_m = n_bar U_m.
/// Cells where sum_m x_m S_m(r)^2 vanishes are flagged undefined.
SnrMap snr_analytic(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle, double n_bar);

struct FlatSnr {
  double snr_flat_sq = 0.0;          ///< (N_bar/M) F_a^2
  double form_factor_flat_sq = 0.0;  ///< F_a^2 = 1 / sum_m t_m ||S_m||^2
  /// Average transmission 1 / sum_m (t_m / ||T_m||^2); equals t^2 / sum_m t_m
  /// when all masks have the same norm.
  double t_tilde = 0.0;
  double bound = 0.0;  ///< (N_bar/M) t_tilde, the orthogonal-set optimum
};

/// Object-free ("flat") SNR. Requires Condition 1.
FlatSnr snr_flat(const PatternSet& patterns, const BasisBundle& bundle, double n_bar, double cond1_tol = 1e-9);

struct IqcResult {
  Field map;  ///< Q_2(r) = F(r) (f_M(r)/M)^{1/2}; 0 where undefined
  std::vector<bool> defined;
  double iqc_flat_sq = 0.0;  ///< Q_{2,a}^2 = F_a^2
  double iqc_dose_sq = 0.0;  ///< (N_bar / N_t) Q_{2,a}^2
};

/// Intrinsic quality characteristic. Requires Condition 1. The pointwise map
/// is emitted as-is and never spatially averaged.
IqcResult iqc(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle, double n_bar,
              double cond1_tol = 1e-9);

/// Flat SNR^2 of the measured signal Y = sum a_m W_m for X = 1.
double snr_flat_measurement(const PatternSet& patterns, double n_bar);

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct MonteCarloSnr {
  Field mean;
  Field stddev;  ///< unbiased
  Field snr;     ///< mean / stddev; 0 where stddev vanishes
  std::vector<double> snr_stderr;
  std::vector<bool> defined;
  std::size_t undefined_count = 0;
  double flat_snr_sq = 0.0;  ///< mean over cells of mean^2 / mean over cells of variance
  double flat_snr_sq_stderr = 0.0;
  std::size_t trials = 0;
  std::size_t batches = 0;
  std::uint64_t seed = 0;
};

/// Reconstructs `trials` Poisson acquisitions (trial k on stream (seed, k))
/// and estimates per-cell and flat SNR. trials >= 100. The result does not
/// depend on the number of threads.
MonteCarloSnr snr_monte_carlo(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle,
                              double n_bar, std::size_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct Scalar {
  std::string name;
  double value = 0.0;
  std::string source;  ///< formula tag, or "mc" for Monte Carlo
};

struct MetricsOptions {
  double cond1_tol = 1e-9;
  double cond2_tol = 1e-9;
  std::vector<LatticeShift> shifts = unit_shifts();
  std::size_t mc_trials = 0;  ///< 0 disables Monte Carlo
  std::uint64_t seed = 0;
};

struct MetricsReport {
  Grid grid;
  std::size_t M = 0;
  double n_bar = 0.0;
  bool condition1 = false;
  bool condition2 = false;
  std::optional<ResolutionMap> resolution;
  std::optional<UniformResolution> resolution_uniform;
  std::optional<double> resolution_measurement;
  SnrMap snr;
  std::optional<FlatSnr> flat;
  std::optional<IqcResult> iqc;
  double snr_flat_in_sq = 0.0;
  std::optional<MonteCarloSnr> mc;
  std::vector<Scalar> scalars;
  std::vector<std::string> notes;
};

/// Everything computable for one (object, pattern set). Quantities whose
/// preconditions fail are left empty and explained in `notes`.
MetricsReport compute_metrics(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle,
                              double n_bar, const MetricsOptions& options = {});

}  // namespace sibucket
