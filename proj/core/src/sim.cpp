#include "sibucket/sim.hpp"

#include "sibucket/error.hpp"
#include "sibucket/parallel.hpp"
#include "sibucket/rng.hpp"

namespace sibucket {

ObjectSpec::ObjectSpec(Field transmission, std::string label) : X_(std::move(transmission)), label_(std::move(label)) {
  for (double v : X_.values()) {
    if (v < 0.0 || v > 1.0) throw ParameterError("object '" + label_ + "': transmission outside [0, 1]");
  }
}

ObjectSpec ObjectSpec::flat(const Grid& grid) { return ObjectSpec(Field::constant(grid, 1.0), "flat"); }

ObjectSpec ObjectSpec::step(const Grid& grid, double level) {
  std::vector<double> v(grid.cell_count());
  for (std::size_t cell = 0; cell < v.size(); ++cell) v[cell] = grid.ix_of(cell) < grid.nx() / 2 ? 1.0 : level;
  return ObjectSpec(Field(grid, std::move(v)), "step");
}

std::vector<double> MeasurementRecord::counts() const {
  if (!sampled()) return a_bar;
  return {a.begin(), a.end()};
}

std::vector<double> transmission_coeffs(const ObjectSpec& object, const PatternSet& patterns) {
  require_same_grid(object.transmission().grid(), patterns.grid(), "transmission_coeffs");
  std::vector<double> x;
  x.reserve(patterns.size());
  for (const auto& mask : patterns.masks()) x.push_back(inner(object.transmission(), mask));
  return x;
}

MeasurementRecord bucket_means(const ObjectSpec& object, const PatternSet& patterns) {
  return bucket_means(object, patterns, patterns.n_bar());
}

MeasurementRecord bucket_means(const ObjectSpec& object, const PatternSet& patterns, double n_bar) {
  if (!(n_bar > 0.0)) throw ParameterError("bucket_means: n_bar must be positive");
  MeasurementRecord rec;
  rec.x = transmission_coeffs(object, patterns);
  rec.n_bar = n_bar;
  rec.a_bar.reserve(rec.x.size());
  for (double xm : rec.x) rec.a_bar.push_back(n_bar * xm);
  rec.N_bar = static_cast<double>(patterns.size()) * n_bar;
  double mask_sum = 0.0;
  for (const auto& mask : patterns.masks()) mask_sum += spatial_mean(mask);
  rec.N_t = n_bar * mask_sum;
  return rec;
}

MeasurementRecord sample_buckets(const MeasurementRecord& means, std::uint64_t seed, std::uint64_t trial) {
  MeasurementRecord rec = means;
  rec.seed = seed;
  rec.trial = trial;
  rec.a.resize(rec.a_bar.size());
  for (std::size_t m = 0; m < rec.a_bar.size(); ++m) {
    Stream rng(seed, trial, m);
    rec.a[m] = poisson(rng, rec.a_bar[m]);
  }
  return rec;
}

std::vector<MeasurementRecord> run_trials(const MeasurementRecord& means, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ParameterError("run_trials: trials must be >= 1");
  std::vector<MeasurementRecord> out(trials);
  parallel_for(trials, [&](std::size_t k) { out[k] = sample_buckets(means, seed, k); });
  return out;
}

std::vector<MeasurementRecord> run_trials(const ObjectSpec& object, const PatternSet& patterns, std::size_t trials,
                                          std::uint64_t seed) {
  return run_trials(bucket_means(object, patterns), trials, seed);
}

}  // namespace sibucket
