#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sibucket/grid.hpp"
#include "sibucket/patterns.hpp"

namespace sibucket {

/// Transmission function of the imaged object, 0 <= X <= 1 at every cell.
class ObjectSpec {
 public:
  ObjectSpec(Field transmission, std::string label = "object");

  const Field& transmission() const noexcept { return X_; }
  const std::string& label() const noexcept { return label_; }

  /// X = 1 everywhere.
  static ObjectSpec flat(const Grid& grid);
  /// X = 1 on the lower half in x and `level` on the upper half.
  static ObjectSpec step(const Grid& grid, double level = 0.5);

 private:
  Field X_;
  std::string label_;
};

/// One bucket-detector acquisition of M patterns.
struct MeasurementRecord {
  std::vector<double> x;          ///< x_m = <X, T_m>
  std::vector<double> a_bar;      ///< mean counts n_bar x_m
  std::vector<std::uint64_t> a;   ///< sampled counts (empty until sampled)
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  double n_bar = 0.0;
  double N_bar = 0.0;  ///< M n_bar
  double N_t = 0.0;    ///< n_bar sum_m <T_m>, photons incident on the object

  std::size_t size() const noexcept { return x.size(); }
  bool sampled() const noexcept { return !a.empty(); }
  /// Sampled counts as reals, or the means if nothing was sampled.
  std::vector<double> counts() const;
};

std::vector<double> transmission_coeffs(const ObjectSpec& object, const PatternSet& patterns);

/// Noise-free record using the pattern set's n_bar.
MeasurementRecord bucket_means(const ObjectSpec& object, const PatternSet& patterns);
/// Noise-free record with an explicit photon budget.
MeasurementRecord bucket_means(const ObjectSpec& object, const PatternSet& patterns, double n_bar);

/// Draws a_m ~ Poisson(a_bar_m) independently, with pattern m using the
/// stream keyed by (seed, trial, m).
MeasurementRecord sample_buckets(const MeasurementRecord& means, std::uint64_t seed, std::uint64_t trial = 0);

/// `trials` independent acquisitions; trial k uses stream (seed, k).
std::vector<MeasurementRecord> run_trials(const ObjectSpec& object, const PatternSet& patterns, std::size_t trials,
                                          std::uint64_t seed);
std::vector<MeasurementRecord> run_trials(const MeasurementRecord& means, std::size_t trials, std::uint64_t seed);

}  // namespace sibucket
