#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sibucket/error.hpp"
#include "sibucket/metrics.hpp"
#include "sibucket/recon.hpp"

using namespace sibucket;

namespace {

Field box(const Grid& g, std::size_t x0, std::size_t y0, std::size_t w) {
  std::vector<double> v(g.cell_count(), 0.0);
  for (std::size_t ix = x0; ix < x0 + w; ++ix) {
    for (std::size_t iy = y0; iy < y0 + w; ++iy) v[g.index(ix, iy)] = 1.0;
  }
  return Field(g, v);
}

double t_sum(const PatternSet& p) {
  double s = 0.0;
  for (const auto& t : p.masks()) s += spatial_mean(t);
  return s;
}

PatternSet zero_mean_set() {
  const Grid g(4, 1, 1.0, 1.0);
  return PatternSet({Field(g, {1.0, -1.0, 0.0, 0.0}), Field(g, {0.0, 0.0, 1.0, -1.0})}, 1.0);
}

}  // namespace

TEST(WidthDelta2, SquareIndicator) {
  const Grid g(10, 10, 5.0, 5.0);  // dx = 0.5
  const Width w = width_delta2(box(g, 3, 2, 4));
  EXPECT_FALSE(w.degenerate);
  EXPECT_NEAR(w.value, 2.0, 1e-14);
}

TEST(WidthDelta2, GaussianMatchesQuadrature) {
  const double s = 0.3;
  const std::size_t n = 241;
  const double W = 16.0 * s;
  const Grid g(n, n, W, W);
  std::vector<double> v(g.cell_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = g.center_x(g.ix_of(i)) - W / 2, y = g.center_y(g.iy_of(i)) - W / 2;
    v[i] = std::exp(-(x * x + y * y) / (2 * s * s));
  }
  const double got = width_delta2(Field(g, v)).value;
  EXPECT_NEAR(got / oracle::gaussian_delta2(s), 1.0, 1e-6);
  EXPECT_NEAR(got / (2.0 * std::sqrt(std::numbers::pi) * s), 1.0, 1e-6);
}

TEST(WidthDelta2, ZeroIntegralIsDegenerate) {
  const Grid g(4, 1, 1.0, 1.0);
  const Width w = width_delta2(Field(g, {1.0, -1.0, 0.5, -0.5}));
  EXPECT_TRUE(w.degenerate);
  EXPECT_EQ(w.value, 0.0);
  EXPECT_THROW(width_delta2(Field::zeros(g)), ParameterError);
}

TEST(WidthDelta2, AxisVariant) {
  const Grid g(8, 4, 4.0, 2.0);  // dx = dy = 0.5
  const Field f = box(g, 2, 0, 3);  // 3 cells wide in x and y
  EXPECT_NEAR(width_delta2_axis(f, Axis::x).value, 1.5, 1e-14);
  EXPECT_NEAR(width_delta2_axis(f, Axis::y).value, 1.5, 1e-14);
}

TEST(WidthVariance, UniformSquare) {
  const Grid g(12, 12, 6.0, 6.0);
  const double h = 2.5;  // 5 cells of 0.5
  EXPECT_NEAR(width_variance(box(g, 4, 1, 5)), h / std::sqrt(6.0), 1e-13);
}

TEST(WidthVariance, SingleCellIsBelowCellSize) {
  const Grid g(9, 9, 1.0, 1.0);
  const double v = width_variance(box(g, 4, 4, 1));
  EXPECT_LE(v, g.dx());
  EXPECT_NEAR(v, std::sqrt(2.0 / 12.0) * g.dx(), 1e-15);
  EXPECT_THROW(width_variance(Field::zeros(g)), ParameterError);
}

TEST(WidthVariance, InequalityHoldsForRandomFields) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(rep % 9);
    const Grid g(n, n + 2, 1.0 + rep * 0.1, 1.0);
    std::vector<double> v(g.cell_count());
    const double sparsity = u(rng);
    for (auto& x : v) x = u(rng) < sparsity ? 0.0 : u(rng);
    v[0] = 1.0;
    const Field f(g, v);
    EXPECT_LE(width_delta2(f).value, kWidthRatioBound * width_variance(f) * (1 + 1e-6));
  }
  EXPECT_NEAR(kWidthRatioBound, 1.5 * std::sqrt(std::numbers::pi), 1e-15);
}

TEST(ResolutionMap, PixelIsPixelSize) {
  const BasisBundle b = biorthogonal(pixel_masks(3, 0.7));
  const ResolutionMap r = resolution_map(b);
  EXPECT_NEAR(r.resolution.min(), 0.7, 1e-12);
  EXPECT_NEAR(r.resolution.max(), 0.7, 1e-12);
  EXPECT_NEAR(r.f_mean, 9.0, 1e-9);
}

TEST(ResolutionMap, HarmonicIsUniform) {
  const BasisBundle b = biorthogonal(harmonic_masks(3, 2.0));
  const ResolutionMap r = resolution_map(b);
  EXPECT_NEAR(r.resolution.min(), 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.resolution.max(), 2.0 / 3.0, 1e-9);
}

TEST(ResolutionMap, MeanOfFIsM) {
  for (const auto& p : {pixel_masks(3, 1.0, 2), two_pixel_masks(5, 1.0, 2), harmonic_masks(5, 1.0),
                        pseudo_random_masks(4, 0.3, 1.5, 2, 9)}) {
    EXPECT_NEAR(resolution_map(biorthogonal(p)).f_mean, static_cast<double>(p.size()), 1e-9);
  }
}

TEST(ResolutionMap, RefusesWithoutConstantInSpan) {
  EXPECT_THROW(resolution_map(biorthogonal(zero_mean_set())), ConditionError);
  EXPECT_THROW(resolution_measurement(zero_mean_set(), biorthogonal(zero_mean_set())), ConditionError);
  EXPECT_THROW(snr_flat(zero_mean_set(), biorthogonal(zero_mean_set()), 1.0), ConditionError);
}

TEST(ResolutionUniform, Examples) {
  const auto h = resolution_uniform(biorthogonal(harmonic_masks(3, 1.0)));
  EXPECT_NEAR(h.value, 1.0 / 3.0, 1e-15);
  EXPECT_LE(h.rel_diff, 1e-6);
  const auto pr = resolution_uniform(biorthogonal(pseudo_random_masks(4, 0.5, 2.0, 7)));
  EXPECT_NEAR(pr.value, 0.25, 1e-15);
  EXPECT_LE(pr.rel_diff, 1e-6);
  const auto one = resolution_uniform(biorthogonal(pixel_masks(1, 3.0, 4)));
  EXPECT_NEAR(one.value, 3.0, 1e-15);
  EXPECT_LE(one.rel_diff, 1e-12);
  EXPECT_THROW(resolution_uniform(biorthogonal(pixel_masks(3, 1.0, 2))), ConditionError);
}

TEST(ResolutionMeasurement, Examples) {
  const PatternSet px = pixel_masks(2, 1.0);
  EXPECT_NEAR(resolution_measurement(px, biorthogonal(px)), 1.0, 1e-12);
  const PatternSet px3 = pixel_masks(3, 0.4, 2, 7.0);
  EXPECT_NEAR(resolution_measurement(px3, biorthogonal(px3)), std::sqrt(px3.grid().area() / 9.0), 1e-9);
  const PatternSet tp = two_pixel_masks(3);
  const double r = resolution_measurement(tp, biorthogonal(tp));
  EXPECT_GT(r, std::sqrt(tp.grid().area() / 9.0));
  EXPECT_NEAR(r, std::sqrt(9.0 * 16.0 / 54.0), 1e-12);
}

TEST(SnrAnalytic, PixelIsPhotonsInPixel) {
  const PatternSet p = pixel_masks(2, 1.0, 2);
  const BasisBundle b = biorthogonal(p);
  const ObjectSpec obj = ObjectSpec::step(p.grid(), 0.3);
  const double n_bar = 500.0;
  const SnrMap s = snr_analytic(obj, p, b, n_bar);
  const auto x = transmission_coeffs(obj, p);
  EXPECT_EQ(s.undefined_count, 0u);
  for (std::size_t i = 0; i < p.grid().cell_count(); ++i) {
    for (std::size_t m = 0; m < 4; ++m) {
      if (p.mask(m)[i] == 1.0) EXPECT_NEAR(s.snr[i] * s.snr[i], n_bar * x[m], 1e-9 * n_bar);
    }
  }
}

TEST(SnrAnalytic, OrthogonalFlatFormFactor) {
  const PatternSet p = pixel_masks(3, 1.0, 2);
  const BasisBundle b = biorthogonal(p);
  const SnrMap s = snr_analytic(ObjectSpec::flat(p.grid()), p, b, 1.0);
  for (std::size_t i = 0; i < p.grid().cell_count(); ++i) {
    double num = 0.0, den = 0.0;
    for (const auto& t : p.masks()) {
      num += spatial_mean(t) * t[i];
      den += spatial_mean(t) * t[i] * t[i];
    }
    EXPECT_NEAR(s.form_factor[i] * s.form_factor[i], num * num / den, 1e-9);
  }
}

TEST(SnrAnalytic, ZeroObjectIsUndefined) {
  const PatternSet p = harmonic_masks(3, 1.0);
  const SnrMap s = snr_analytic(ObjectSpec(Field::zeros(p.grid())), p, biorthogonal(p), 10.0);
  EXPECT_EQ(s.undefined_count, p.grid().cell_count());
  EXPECT_EQ(s.snr.max(), 0.0);
}

TEST(SnrAnalytic, PartiallyDarkObjectFlagsCells) {
  const PatternSet p = pixel_masks(2, 1.0, 2);
  const SnrMap s = snr_analytic(ObjectSpec::step(p.grid(), 0.0), p, biorthogonal(p), 10.0);
  EXPECT_EQ(s.undefined_count, 8u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(s.defined[i], p.grid().ix_of(i) < 2);
}

TEST(SnrFlat, FamilyClosedForms) {
  const double n_bar = 1000.0;
  {
    const PatternSet p = pixel_masks(5, 1.0);
    const FlatSnr f = snr_flat(p, biorthogonal(p), n_bar);
    const double N = 25.0 * n_bar;
    EXPECT_NEAR(f.snr_flat_sq, N / 625.0, 1e-9 * N / 625.0);
    EXPECT_NEAR(f.snr_flat_sq, f.bound, 1e-9 * f.bound);
    EXPECT_NEAR(f.t_tilde, 1.0 / 25.0, 1e-15);
  }
  {
    const PatternSet p = two_pixel_masks(5);
    const FlatSnr f = snr_flat(p, biorthogonal(p), n_bar);
    EXPECT_NEAR(f.form_factor_flat_sq, 2.0 / 625.0, 1e-12);
    EXPECT_LT(f.snr_flat_sq, f.bound);
  }
  {
    const PatternSet p = harmonic_masks(3, 1.0);
    const FlatSnr f = snr_flat(p, biorthogonal(p), n_bar);
    EXPECT_NEAR(f.form_factor_flat_sq, 3.0 / 324.0, 1e-12);
    EXPECT_LT(f.snr_flat_sq, f.bound);
  }
  EXPECT_THROW(snr_flat(pixel_masks(2, 1.0), biorthogonal(pixel_masks(2, 1.0)), -1.0), ParameterError);
}

TEST(SnrFlat, AverageTransmissionReducesToSquaredNormRatio) {
  // With equal mask norms t^2, t_tilde = t^2 / sum t_m.
  const PatternSet p = two_pixel_masks(3);
  const FlatSnr f = snr_flat(p, biorthogonal(p), 1.0);
  EXPECT_NEAR(f.t_tilde, (2.0 / 9.0) / t_sum(p), 1e-15);
}

TEST(Iqc, PixelAndPseudoRandom) {
  {
    const PatternSet p = pixel_masks(5, 1.0);
    const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, biorthogonal(p), 10.0);
    EXPECT_NEAR(q.iqc_flat_sq, 1.0 / 25.0, 1e-12);
    EXPECT_NEAR(q.iqc_dose_sq, 1.0, 1e-12);
    // Invariance in the orthogonal case: Q_{2,a} = t_tilde^{1/2}.
    EXPECT_NEAR(q.iqc_flat_sq, snr_flat(p, biorthogonal(p), 10.0).t_tilde, 1e-9);
    for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(q.map[i] * q.map[i], 1.0 / 25.0, 1e-12);
  }
  for (std::size_t M : {5u, 16u}) {
    const PatternSet p = pseudo_random_masks(4, 0.5, 2.0, 7, M);
    const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, biorthogonal(p), 10.0);
    EXPECT_NEAR(q.iqc_flat_sq, oracle::pseudo_random_iqc_sq(0.5, 2.0, M), 1e-12);
    EXPECT_NEAR(q.iqc_dose_sq, q.iqc_flat_sq / 0.5, 1e-12);
  }
  EXPECT_NEAR(oracle::pseudo_random_iqc_sq(0.5, 2.0, 5), 0.5 / 33.0, 1e-16);
}

TEST(Iqc, HarmonicDoseApproximation) {
  for (std::size_t L : {3u, 9u}) {
    const std::size_t M = L * L;
    const PatternSet p = harmonic_masks(L, 1.0);
    const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, biorthogonal(p), 1.0);
    EXPECT_NEAR(q.iqc_flat_sq, oracle::harmonic_iqc_sq(M), 1e-11);
    // Exact over approximate is M / (M + 1/2).
    const double ratio = q.iqc_dose_sq / oracle::harmonic_dose_iqc_sq_large_M(M);
    EXPECT_NEAR(ratio, M / (M + 0.5), 1e-9);
  }
}

TEST(SnrFlatMeasurement, Examples) {
  const double n_bar = 40.0;
  const PatternSet p = pixel_masks(4, 1.0);
  const double in = snr_flat_measurement(p, n_bar);
  EXPECT_NEAR(in, 16.0 * n_bar / 256.0, 1e-12);
  const FlatSnr f = snr_flat(p, biorthogonal(p), n_bar);
  EXPECT_NEAR(in, f.bound, 1e-9 * in);
  EXPECT_NEAR(in, f.snr_flat_sq, 1e-9 * in);
  const PatternSet tp = two_pixel_masks(3);
  EXPECT_GT(snr_flat_measurement(tp, n_bar), snr_flat(tp, biorthogonal(tp), n_bar).snr_flat_sq);
}

TEST(MonteCarlo, FlatPixelAgreesWithClosedForm) {
  const PatternSet p = pixel_masks(2, 1.0);
  const BasisBundle b = biorthogonal(p);
  const double n_bar = 4e4;
  const MonteCarloSnr mc = snr_monte_carlo(ObjectSpec::flat(p.grid()), p, b, n_bar, 4000, 11);
  const double want = 4.0 * n_bar / 16.0;
  EXPECT_LE(std::abs(mc.flat_snr_sq - want), 5.0 * mc.flat_snr_sq_stderr + 0.0) << mc.flat_snr_sq_stderr;
  EXPECT_GT(mc.flat_snr_sq_stderr, 0.0);
  EXPECT_EQ(mc.batches, 20u);
  EXPECT_EQ(mc.trials, 4000u);
}

TEST(MonteCarlo, PerCellAgreesWithAnalytic) {
  const double n_bar = 2000.0;
  for (const auto& p : {two_pixel_masks(3, 1.0, 2), pseudo_random_masks(4, 0.5, 2.0, 7)}) {
    const BasisBundle b = biorthogonal(p);
    const ObjectSpec obj = ObjectSpec::step(p.grid());
    const SnrMap a = snr_analytic(obj, p, b, n_bar);
    const MonteCarloSnr mc = snr_monte_carlo(obj, p, b, n_bar, 3000, 5);
    for (std::size_t i = 0; i < p.grid().cell_count(); ++i) {
      ASSERT_TRUE(mc.defined[i]);
      EXPECT_LE(std::abs(mc.snr[i] - a.snr[i]), 5.0 * mc.snr_stderr[i]) << to_string(p.family()) << " cell " << i;
    }
  }
}

TEST(MonteCarlo, LargeBudgetMatchesNoiseless) {
  const PatternSet p = harmonic_masks(3, 1.0);
  const BasisBundle b = biorthogonal(p);
  const ObjectSpec obj = ObjectSpec::step(p.grid());
  const double n_bar = 1e12;
  const MonteCarloSnr mc = snr_monte_carlo(obj, p, b, n_bar, 100, 3);
  const Field clean = reconstruct(bucket_means(obj, p), b);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_LT(mc.stddev[i] / std::abs(mc.mean[i]), 1e-3);
    EXPECT_NEAR(mc.mean[i], clean[i], 1e-3 * std::abs(clean[i]));
  }
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  const PatternSet p = two_pixel_masks(3);
  const BasisBundle b = biorthogonal(p);
  const ObjectSpec obj = ObjectSpec::flat(p.grid());
  ::setenv("SIBUCKET_THREADS", "1", 1);
  const MonteCarloSnr a = snr_monte_carlo(obj, p, b, 100.0, 200, 9);
  ::setenv("SIBUCKET_THREADS", "3", 1);
  const MonteCarloSnr c = snr_monte_carlo(obj, p, b, 100.0, 200, 9);
  ::unsetenv("SIBUCKET_THREADS");
  EXPECT_EQ(a.flat_snr_sq, c.flat_snr_sq);
  EXPECT_EQ(a.flat_snr_sq_stderr, c.flat_snr_sq_stderr);
  for (std::size_t i = 0; i < a.mean.size(); ++i) EXPECT_EQ(a.mean[i], c.mean[i]);
}

TEST(MonteCarlo, RequiresEnoughTrials) {
  const PatternSet p = pixel_masks(2, 1.0);
  EXPECT_THROW(snr_monte_carlo(ObjectSpec::flat(p.grid()), p, biorthogonal(p), 10.0, 99, 1), ParameterError);
}

TEST(Report, CollectsEverything) {
  const PatternSet p = harmonic_masks(3, 1.0);
  const BasisBundle b = biorthogonal(p);
  MetricsOptions opt;
  opt.mc_trials = 200;
  opt.seed = 4;
  const MetricsReport r = compute_metrics(ObjectSpec::flat(p.grid()), p, b, 100.0, opt);
  EXPECT_TRUE(r.condition1);
  EXPECT_TRUE(r.condition2);
  ASSERT_TRUE(r.flat && r.iqc && r.resolution && r.resolution_uniform && r.mc);
  EXPECT_EQ(r.iqc->iqc_flat_sq, r.flat->form_factor_flat_sq);
  EXPECT_LE(r.flat->snr_flat_sq, r.flat->bound * (1 + 1e-9));
  EXPECT_EQ(r.resolution->resolution.grid(), r.snr.snr.grid());
  bool has_mc = false;
  for (const auto& s : r.scalars) {
    EXPECT_FALSE(s.source.empty());
    has_mc = has_mc || s.source == "mc";
  }
  EXPECT_TRUE(has_mc);
}

TEST(Report, ExplainsMissingQuantities) {
  const PatternSet p = pixel_masks(2, 1.0, 2);
  const MetricsReport r = compute_metrics(ObjectSpec::flat(p.grid()), p, biorthogonal(p), 10.0);
  EXPECT_TRUE(r.condition1);
  EXPECT_FALSE(r.condition2);
  EXPECT_FALSE(r.resolution_uniform.has_value());
  EXPECT_FALSE(r.notes.empty());
  const MetricsReport z = compute_metrics(ObjectSpec::flat(zero_mean_set().grid()), zero_mean_set(),
                                          biorthogonal(zero_mean_set()), 10.0);
  EXPECT_FALSE(z.condition1);
  EXPECT_FALSE(z.flat.has_value());
}
