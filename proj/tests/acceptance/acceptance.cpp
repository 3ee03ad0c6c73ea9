// Acceptance criteria 1-9. One PASS/FAIL line per criterion; exits nonzero
// if any criterion fails. Sub-check details are printed indented below.

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sibucket/metrics.hpp"
#include "sibucket/recon.hpp"

using namespace sibucket;

namespace {

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  // |got - want| <= tol * |want| (absolute when want == 0).
  void close(const std::string& what, double got, double want, double tol) {
    const double err = oracle::rel_err(got, want);
    record(what, err <= tol, got, want, err, tol);
  }
  void at_most(const std::string& what, double got, double limit) {
    record(what, got <= limit, got, limit, got, limit);
  }
  void truth(const std::string& what, bool ok) {
    ok_ = ok_ && ok;
    lines_.push_back(std::string(ok ? "ok   " : "BAD  ") + what);
  }
  void note(const std::string& text) { lines_.push_back("info " + text); }

  bool report(int id) const {
    std::printf("%s %d %s\n", ok_ ? "PASS" : "FAIL", id, title_.c_str());
    for (const auto& l : lines_) std::printf("    %s\n", l.c_str());
    return ok_;
  }

 private:
  void record(const std::string& what, bool ok, double got, double want, double err, double tol) {
    ok_ = ok_ && ok;
    char buf[320];
    std::snprintf(buf, sizeof buf, "%-4s %-48s got %.12g ref %.12g err %.3g tol %.3g", ok ? "ok" : "BAD",
                  what.c_str(), got, want, err, tol);
    lines_.emplace_back(buf);
  }

  std::string title_;
  std::vector<std::string> lines_;
  bool ok_ = true;
};

double max_abs_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double t_sum(const PatternSet& p) {
  double s = 0.0;
  for (const auto& t : p.masks()) s += spatial_mean(t);
  return s;
}

bool criterion1() {
  Criterion c("pixel family L=5: resolution, flat SNR, IQC");
  const double n_bar = 1e4, N = 25.0 * n_bar;
  const PatternSet p = pixel_masks(5, 1.0, 1, n_bar);
  const BasisBundle b = biorthogonal(p);
  const ResolutionMap r = resolution_map(b);
  c.close("resolution map min", r.resolution.min(), 1.0, 1e-12);
  c.close("resolution map max", r.resolution.max(), 1.0, 1e-12);
  const FlatSnr f = snr_flat(p, b, n_bar);
  c.close("flat SNR^2 vs N/625", f.snr_flat_sq, N / 625.0, 1e-9);
  const MonteCarloSnr mc = snr_monte_carlo(ObjectSpec::flat(p.grid()), p, b, n_bar, 10000, 2024);
  c.close("Monte Carlo flat SNR^2 vs N/625 (3%)", mc.flat_snr_sq, N / 625.0, 0.03);
  const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, b, n_bar);
  c.close("Q^2 flat vs 1/25", q.iqc_flat_sq, 1.0 / 25.0, 1e-9);
  c.close("dose Q^2 vs 1", q.iqc_dose_sq, 1.0, 1e-9);
  return c.report(1);
}

bool criterion2() {
  Criterion c("two-pixel family M=9: biorthogonal lengths and IQC");
  const PatternSet p = two_pixel_masks(3);
  const BasisBundle b = biorthogonal(p);
  double worst = 0.0;
  for (std::size_t m = 0; m < 9; ++m) worst = std::max(worst, oracle::rel_err(inner(b.S(m), b.S(m)), 81.0 / 4.0));
  c.at_most("max_m rel err of ||S_m||^2 vs 81/4", worst, 1e-9);
  const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, b, 1.0);
  c.close("Q^2 flat vs 2/81", q.iqc_flat_sq, 2.0 / 81.0, 1e-9);
  c.close("dose Q^2 vs 1/9", q.iqc_dose_sq, 1.0 / 9.0, 1e-9);
  return c.report(2);
}

bool criterion3() {
  Criterion c("harmonic family L=3 on 12x12: sum V^2, resolution, IQC, Monte Carlo");
  const double n_bar = 1e6, N = 9.0 * n_bar;
  const PatternSet p = harmonic_masks(3, 1.0, 12, n_bar);
  const BasisBundle b = biorthogonal(p);
  const ResolutionMap r = resolution_map(b);
  c.close("min sum V_m^2 vs 9", r.f_m.min(), 9.0, 1e-9);
  c.close("max sum V_m^2 vs 9", r.f_m.max(), 9.0, 1e-9);
  const double area = p.grid().area();
  c.close("resolution map^2 (min) vs |region|/9", r.resolution.min() * r.resolution.min(), area / 9.0, 1e-9);
  c.close("resolution map^2 (max) vs |region|/9", r.resolution.max() * r.resolution.max(), area / 9.0, 1e-9);
  const UniformResolution u = resolution_uniform(b);
  c.close("uniform resolution^2 vs |region|/9", u.value * u.value, area / 9.0, 1e-9);
  const FlatSnr f = snr_flat(p, b, n_bar);
  c.close("Q^2 flat vs 3/324", f.form_factor_flat_sq, 3.0 / 324.0, 1e-9);
  const MonteCarloSnr mc = snr_monte_carlo(ObjectSpec::flat(p.grid()), p, b, n_bar, 10000, 2025);
  c.close("Monte Carlo flat SNR^2 vs (N/9)(3/324) (5%)", mc.flat_snr_sq, N / 9.0 * 3.0 / 324.0, 0.05);
  return c.report(3);
}

bool criterion4() {
  Criterion c("pseudo-random family M=16, t1=0.5, kappa=2: variance constraint, IQC, resolution");
  const double t1 = 0.5, kappa = 2.0, sigma = t1 / kappa;
  const PatternSet p = pseudo_random_masks(4, t1, kappa, 7);
  double resid = 0.0;
  for (std::size_t a = 1; a < p.size(); ++a) {
    for (std::size_t k = 1; k < p.size(); ++k) {
      const double cov = inner(p.mask(a) - p.mask(0), p.mask(k) - p.mask(0));
      resid = std::max(resid, std::abs(cov - (a == k ? sigma * sigma : 0.0)));
    }
  }
  c.at_most("second-order pattern constraint residual", resid, 1e-12);
  const BasisBundle b = biorthogonal(p);
  const FlatSnr f = snr_flat(p, b, 1.0);
  c.close("Q^2 flat vs 0.5/121", f.form_factor_flat_sq, 0.5 / 121.0, 1e-9);
  const auto c2 = check_condition2(b, unit_shifts());
  c.truth("Green's function shift invariant", c2.holds);
  if (c2.holds) {
    const UniformResolution u = resolution_uniform(b);
    c.close("PSF width^2 vs |region|/16", u.psf_width * u.psf_width, p.grid().area() / 16.0, 1e-6);
  }
  return c.report(4);
}

bool criterion5() {
  Criterion c("structural properties on all four families");
  const std::vector<PatternSet> sets{pixel_masks(5, 1.0, 1, 50.0), two_pixel_masks(5, 1.0, 1, 50.0),
                                     harmonic_masks(3, 1.0, 12, 50.0), pseudo_random_masks(4, 0.5, 2.0, 7, 0, 1.0, 50.0)};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& p : sets) {
    const std::string name = to_string(p.family());
    const BasisBundle b = biorthogonal(p);
    std::vector<double> xv(p.grid().cell_count());
    for (auto& x : xv) x = u(rng);
    const ObjectSpec obj(Field(p.grid(), xv), "random");

    const Field y = reconstruct(bucket_means(obj, p), b);
    std::vector<double> a2;
    for (std::size_t m = 0; m < p.size(); ++m) a2.push_back(inner(y, b.W[m]));
    const Field yy = reconstruct(a2, b);
    c.at_most(name + ": projector idempotence", max_abs_diff(yy, y) / std::max(1.0, y.max()), 1e-8);

    double bi = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
      for (std::size_t k = 0; k < p.size(); ++k) bi = std::max(bi, std::abs(inner(b.U[m], b.W[k]) - (m == k)));
    }
    c.at_most(name + ": biorthogonality", bi, 1e-9);

    c.close(name + ": total transmission conserved", integral(y), integral(obj.transmission()), 1e-8);

    const FlatSnr f = snr_flat(p, b, p.n_bar());
    const Matrix G = gram(p).entries();
    const bool diagonal = (G - Matrix(G.diagonal().asDiagonal())).cwiseAbs().maxCoeff() <= 1e-12 * G.maxCoeff();
    c.truth(name + ": SNR^2 <= (N/M) t~", f.snr_flat_sq <= f.bound * (1 + 1e-9));
    const bool equal = oracle::rel_err(f.snr_flat_sq, f.bound) <= 1e-9;
    c.truth(name + ": equality iff diagonal Gram", equal == diagonal);
  }
  return c.report(5);
}

bool criterion6() {
  Criterion c("width inequality width_delta2 <= (3 sqrt(pi)/2) width_variance");
  const double k = 1.5 * std::sqrt(std::numbers::pi) * (1 + 1e-6);
  const std::vector<PatternSet> sets{pixel_masks(5, 1.0), two_pixel_masks(5), harmonic_masks(3, 1.0, 12),
                                     pseudo_random_masks(4, 0.5, 2.0, 7), harmonic_masks(5, 2.0, 40)};
  for (const auto& p : sets) {
    const BasisBundle b = biorthogonal(p);
    if (!check_condition2(b, unit_shifts()).holds) continue;
    const Field g = psf(b);
    const double d2 = width_delta2(g).value, dv = width_variance(g);
    c.at_most(to_string(p.family()) + " M=" + std::to_string(p.size()) + " PSF: delta2 / (k var)", d2 / (k * dv), 1.0);
  }
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t nx = 3 + rep % 17, ny = 2 + (rep * 7) % 13;
    const Grid g(nx, ny, 0.5 + u(rng), 0.5 + u(rng));
    std::vector<double> v(g.cell_count());
    const double p0 = u(rng), shape = 1.0 + 4.0 * u(rng);
    for (auto& x : v) x = u(rng) < p0 ? 0.0 : std::pow(u(rng), shape);
    v[rng() % v.size()] = 1.0;
    const Field f(g, v);
    worst = std::max(worst, width_delta2(f).value / (k * width_variance(f)));
  }
  c.at_most("50 random nonnegative fields: max ratio", worst, 1.0);
  return c.report(6);
}

bool criterion7() {
  Criterion c("pixel family: measurement-space resolution and flat SNR invariance");
  const double n_bar = 321.0;
  const PatternSet p = pixel_masks(5, 0.8, 1, n_bar);
  const BasisBundle b = biorthogonal(p);
  c.close("measurement resolution vs (|region|/M)^(1/2)", resolution_measurement(p, b),
          std::sqrt(p.grid().area() / 25.0), 1e-9);
  c.close("measured flat SNR^2 vs reconstructed", snr_flat_measurement(p, n_bar), snr_flat(p, b, n_bar).snr_flat_sq,
          1e-9);
  return c.report(7);
}

bool criterion8() {
  Criterion c("reconstruction matrix classes");
  Matrix rot(2, 2), conv(2, 2), deconv(2, 2);
  rot << 1, 1, -1, 1;
  conv << 1, 0, 0.5, 0.5;
  deconv << 1, 0, -1, 2;
  auto label = [](const Matrix& m) { return classify({m, ReconClass::unclassified, {}}).label; };
  c.truth("rotation-like (1,1)/(-1,1) -> I", label(rot) == ReconClass::I);
  c.truth("averaging (1,0)/(1/2,1/2) -> II", label(conv) == ReconClass::II);
  c.truth("differencing (1,0)/(-1,2) -> III", label(deconv) == ReconClass::III);
  c.truth("pixel -> I", label(recon_matrix(biorthogonal(pixel_masks(5, 1.0))).r) == ReconClass::I);
  c.truth("two-pixel -> III", label(recon_matrix(biorthogonal(two_pixel_masks(5))).r) == ReconClass::III);
  c.truth("harmonic -> III", label(recon_matrix(biorthogonal(harmonic_masks(3, 1.0))).r) == ReconClass::III);
  c.truth("pseudo-random -> III",
          label(recon_matrix(biorthogonal(pseudo_random_masks(4, 0.5, 2.0, 7))).r) == ReconClass::III);
  return c.report(8);
}

bool criterion9() {
  Criterion c("Poisson counts: variance/mean and cross-correlation over 1e4 trials");
  const PatternSet p = harmonic_masks(3, 1.0, 12, 400.0);  // a_bar in {300, 200}
  const auto trials = run_trials(ObjectSpec::flat(p.grid()), p, 10000, 99);
  const std::size_t M = p.size();
  std::vector<double> mean(M, 0.0), var(M, 0.0);
  for (const auto& t : trials) {
    for (std::size_t m = 0; m < M; ++m) mean[m] += static_cast<double>(t.a[m]);
  }
  for (auto& v : mean) v /= static_cast<double>(trials.size());
  Matrix cov = Matrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  for (const auto& t : trials) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            (static_cast<double>(t.a[i]) - mean[i]) * (static_cast<double>(t.a[j]) - mean[j]);
      }
    }
  }
  cov /= static_cast<double>(trials.size() - 1);
  double lo = 1e300, hi = 0.0, corr = 0.0, min_abar = 1e300;
  for (std::size_t i = 0; i < M; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    min_abar = std::min(min_abar, trials[0].a_bar[i]);
    lo = std::min(lo, cov(ii, ii) / mean[i]);
    hi = std::max(hi, cov(ii, ii) / mean[i]);
    for (std::size_t j = i + 1; j < M; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      corr = std::max(corr, std::abs(cov(ii, jj) / std::sqrt(cov(ii, ii) * cov(jj, jj))));
    }
  }
  c.truth("min a_bar >= 100", min_abar >= 100.0);
  c.truth("min Var/Mean >= 0.9", lo >= 0.9);
  c.truth("max Var/Mean <= 1.1", hi <= 1.1);
  c.truth("max |cross-correlation| < 0.05", corr < 0.05);
  char buf[96];
  std::snprintf(buf, sizeof buf, "Var/Mean range [%.4f, %.4f], max |correlation| %.4f", lo, hi, corr);
  c.note(buf);
  return c.report(9);
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> all{criterion1, criterion2, criterion3, criterion4, criterion5,
                                               criterion6, criterion7, criterion8, criterion9};
  int failed = 0;
  for (const auto& f : all) {
    try {
      failed += f() ? 0 : 1;
    } catch (const std::exception& e) {
      std::printf("FAIL (exception) %s\n", e.what());
      ++failed;
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
