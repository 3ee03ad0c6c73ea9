#include "sibucket/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sibucket/error.hpp"
#include "sibucket/parallel.hpp"
#include "sibucket/recon.hpp"

namespace sibucket {

namespace {

// Cells where sum_m x_m S_m(r)^2 falls below this fraction of its maximum are
// treated as exact zeros contaminated by rounding.
constexpr double kUndefinedRel = 1e-20;
constexpr std::size_t kBatches = 20;

Width width_from(double integral_g, double integral_g2, double sum_abs, const char* context) {
  if (!(integral_g2 > 0.0)) throw ParameterError(std::string(context) + ": field is identically zero");
  Width w;
  if (std::abs(integral_g) <= 1e-12 * sum_abs) {
    w.degenerate = true;
    return w;
  }
  w.value = integral_g / std::sqrt(integral_g2);
  return w;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void require_condition1(const BasisBundle& bundle, double tol, const char* context) {
  const auto c1 = check_condition1(bundle, tol);
  if (!c1.holds) {
    throw ConditionError(std::string(context) + ": constant field is not in the pattern span (residual " +
                         fmt(c1.residual) + ")");
  }
}

Field f_m_field(const BasisBundle& bundle) {
  std::vector<double> f(bundle.grid.cell_count(), 0.0);
  for (const auto& v : bundle.V) {
    const auto s = v.values();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += s[i] * s[i];
  }
  return Field(bundle.grid, std::move(f));
}

struct FormFactor {
  std::vector<double> F;
  std::vector<bool> defined;
  std::size_t undefined = 0;
};

FormFactor form_factor(const std::vector<double>& x, const std::vector<Field>& S, std::size_t N) {
  std::vector<double> num(N, 0.0), den(N, 0.0);
  for (std::size_t m = 0; m < S.size(); ++m) {
    const auto s = S[m].values();
    for (std::size_t i = 0; i < N; ++i) {
      num[i] += x[m] * s[i];
      den[i] += x[m] * s[i] * s[i];
    }
  }
  const double den_max = *std::max_element(den.begin(), den.end());
  FormFactor out{std::vector<double>(N, 0.0), std::vector<bool>(N, false), 0};
  for (std::size_t i = 0; i < N; ++i) {
    if (den_max > 0.0 && den[i] > kUndefinedRel * den_max) {
      out.F[i] = num[i] / std::sqrt(den[i]);
      out.defined[i] = true;
    } else {
      ++out.undefined;
    }
  }
  return out;
}

// Per-cell running moments for a contiguous block of trials.
struct Moments {
  std::size_t n = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t cells) : mean(cells, 0.0), m2(cells, 0.0) {}

  void add(const Eigen::VectorXd& y) {
    ++n;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = y(static_cast<Eigen::Index>(i)) - mean[i];
      mean[i] += d * inv;
      m2[i] += d * (y(static_cast<Eigen::Index>(i)) - mean[i]);
    }
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = o.mean[i] - mean[i];
      mean[i] += d * nb / nt;
      m2[i] += o.m2[i] + d * d * na * nb / nt;
    }
    n += o.n;
  }

  double variance(std::size_t i) const { return n > 1 ? m2[i] / static_cast<double>(n - 1) : 0.0; }
};

}  // namespace

Width width_delta2(const Field& g) {
  const auto v = g.values();
  std::vector<double> sq(v.size()), ab(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    sq[i] = v[i] * v[i];
    ab[i] = std::abs(v[i]);
  }
  const double ca = g.grid().cell_area();
  return width_from(pairwise_sum(v) * ca, pairwise_sum(sq) * ca, pairwise_sum(ab) * ca, "width_delta2");
}

Width width_delta2_axis(const Field& g, Axis axis) {
  const Grid& grid = g.grid();
  const bool along_x = axis == Axis::x;
  const std::size_t n = along_x ? grid.nx() : grid.ny();
  const double step = along_x ? grid.dx() : grid.dy();
  const double across = along_x ? grid.dy() : grid.dx();
  std::vector<double> profile(n, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    profile[along_x ? grid.ix_of(i) : grid.iy_of(i)] += g[i] * across;
  }
  double s = 0.0, s2 = 0.0, sa = 0.0;
  for (double p : profile) {
    s += p;
    s2 += p * p;
    sa += std::abs(p);
  }
  // Squared so the result is a length, like the 2-D width.
  Width w = width_from(s * step, s2 * step, sa * step, "width_delta2_axis");
  w.value *= w.value;
  return w;
}

double width_variance(const Field& g) {
  const Grid& grid = g.grid();
  double mass = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = std::abs(g[i]);
    mass += w;
    cx += w * grid.center_x(grid.ix_of(i));
    cy += w * grid.center_y(grid.iy_of(i));
  }
  if (!(mass > 0.0)) throw ParameterError("width_variance: field has zero mass");
  cx /= mass;
  cy /= mass;
  double var = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ddx = grid.center_x(grid.ix_of(i)) - cx;
    const double ddy = grid.center_y(grid.iy_of(i)) - cy;
    var += std::abs(g[i]) * (ddx * ddx + ddy * ddy);
  }
  var = var / mass + (grid.dx() * grid.dx() + grid.dy() * grid.dy()) / 12.0;
  return std::sqrt(var);
}

ResolutionMap resolution_map(const BasisBundle& bundle, double cond1_tol) {
  require_condition1(bundle, cond1_tol, "resolution_map");
  Field f = f_m_field(bundle);
  const double area = bundle.grid.area();
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(f[i] > 0.0)) throw ConditionError("resolution_map: f_M vanishes at cell " + std::to_string(i));
    r[i] = std::sqrt(area / f[i]);
  }
  const double mean = spatial_mean(f);
  return {Field(bundle.grid, std::move(r)), std::move(f), mean};
}

UniformResolution resolution_uniform(const BasisBundle& bundle, std::span<const LatticeShift> shifts, double tol) {
  const Field g = psf(bundle, shifts, tol);
  UniformResolution out;
  out.value = std::sqrt(bundle.grid.area() / static_cast<double>(bundle.size()));
  out.psf_width = width_delta2(g).value;
  out.rel_diff = std::abs(out.psf_width - out.value) / out.value;
  return out;
}

UniformResolution resolution_uniform(const BasisBundle& bundle, double tol) {
  const auto shifts = unit_shifts();
  return resolution_uniform(bundle, shifts, tol);
}

double resolution_measurement(const PatternSet& patterns, const BasisBundle& bundle, double cond1_tol) {
  require_condition1(bundle, cond1_tol, "resolution_measurement");
  const GramMatrix g = gram(patterns);
  const std::size_t M = patterns.size();
  std::vector<double> mean_w(M);
  for (std::size_t m = 0; m < M; ++m) mean_w[m] = spatial_mean(bundle.W[m]);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      num += mean_w[i] * mean_w[j] * g(i, j);
      den += g(i, j) * g(i, j);
    }
  }
  return std::sqrt(patterns.grid().area() * num / den);
}

SnrMap snr_analytic(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle, double n_bar) {
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw ParameterError("snr_analytic: n_bar must be positive");
  if (!bundle.has_biorthogonal()) throw ParameterError("snr_analytic: bundle lacks biorthogonal vectors");
  require_same_grid(object.transmission().grid(), bundle.grid, "snr_analytic");
  const auto x = transmission_coeffs(object, patterns);
  FormFactor ff = form_factor(x, bundle.S_all(), bundle.grid.cell_count());
  std::vector<double> snr(ff.F.size());
  const double scale = std::sqrt(n_bar);
  for (std::size_t i = 0; i < snr.size(); ++i) snr[i] = scale * ff.F[i];
  return {Field(bundle.grid, std::move(snr)), Field(bundle.grid, std::move(ff.F)), std::move(ff.defined),
          ff.undefined};
}

FlatSnr snr_flat(const PatternSet& patterns, const BasisBundle& bundle, double n_bar, double cond1_tol) {
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw ParameterError("snr_flat: n_bar must be positive");
  require_condition1(bundle, cond1_tol, "snr_flat");
  double weighted = 0.0, inv_len = 0.0;
  for (std::size_t m = 0; m < patterns.size(); ++m) {
    const double t = spatial_mean(patterns.mask(m));
    const double s = norm(bundle.S(m));
    const double len = norm(patterns.mask(m));
    weighted += t * s * s;
    inv_len += t / (len * len);
  }
  FlatSnr out;
  out.form_factor_flat_sq = 1.0 / weighted;
  out.snr_flat_sq = n_bar * out.form_factor_flat_sq;
  out.t_tilde = 1.0 / inv_len;
  out.bound = n_bar * out.t_tilde;
  return out;
}

IqcResult iqc(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle, double n_bar,
              double cond1_tol) {
  const FlatSnr flat = snr_flat(patterns, bundle, n_bar, cond1_tol);
  const SnrMap snr = snr_analytic(object, patterns, bundle, n_bar);
  const Field f = f_m_field(bundle);
  const double M = static_cast<double>(patterns.size());
  std::vector<double> q(f.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (snr.defined[i]) q[i] = snr.form_factor[i] * std::sqrt(f[i] / M);
  }
  double t_sum = 0.0;
  for (std::size_t m = 0; m < patterns.size(); ++m) t_sum += spatial_mean(patterns.mask(m));
  IqcResult out{Field(bundle.grid, std::move(q)), snr.defined, flat.form_factor_flat_sq, 0.0};
  out.iqc_dose_sq = out.iqc_flat_sq * M / t_sum;
  return out;
}

double snr_flat_measurement(const PatternSet& patterns, double n_bar) {
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw ParameterError("snr_flat_measurement: n_bar must be positive");
  const std::size_t M = patterns.size();
  std::vector<double> t(M), tt(M);
  for (std::size_t m = 0; m < M; ++m) t[m] = spatial_mean(patterns.mask(m));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = i; j < M; ++j) {
      const double g = inner(patterns.mask(i), patterns.mask(j));
      num += (i == j ? 1.0 : 2.0) * t[i] * t[j] * g;
      if (i == j) den += t[i] * g;
    }
  }
  return n_bar * num / den;
}

MonteCarloSnr snr_monte_carlo(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle,
                              double n_bar, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw ParameterError("snr_monte_carlo: at least 100 trials are required");
  if (!bundle.has_biorthogonal()) throw ParameterError("snr_monte_carlo: bundle lacks biorthogonal vectors");
  const MeasurementRecord means = bucket_means(object, patterns, n_bar);
  const std::size_t N = bundle.grid.cell_count();
  const std::size_t M = bundle.size();

  // Columns of Sn are S_m / n_bar, so Sn * a is the reconstruction.
  Matrix Sn(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  for (std::size_t m = 0; m < M; ++m) {
    const Field s = bundle.S(m);
    for (std::size_t i = 0; i < N; ++i) Sn(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = s[i] / n_bar;
  }

  const std::size_t B = std::min(kBatches, trials);
  std::vector<Moments> batch(B, Moments(N));
  parallel_for(B, [&](std::size_t b) {
    const std::size_t lo = b * trials / B, hi = (b + 1) * trials / B;
    Eigen::VectorXd a(static_cast<Eigen::Index>(M));
    for (std::size_t k = lo; k < hi; ++k) {
      const MeasurementRecord r = sample_buckets(means, seed, k);
      for (std::size_t m = 0; m < M; ++m) a(static_cast<Eigen::Index>(m)) = static_cast<double>(r.a[m]);
      batch[b].add(Sn * a);
    }
  });

  Moments total(N);
  for (const auto& m : batch) total.merge(m);

  MonteCarloSnr out{Field::zeros(bundle.grid), Field::zeros(bundle.grid), Field::zeros(bundle.grid), {}, {}, 0,
                    0.0, 0.0, trials, B, seed};
  std::vector<double> sd(N), snr(N, 0.0);
  out.snr_stderr.assign(N, 0.0);
  out.defined.assign(N, false);
  double sum_mean_sq = 0.0, sum_var = 0.0;
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i < N; ++i) {
    const double var = total.variance(i);
    sd[i] = std::sqrt(var);
    // Variance at the level of accumulated rounding is not noise.
    if (var > 1e-24 * (total.mean[i] * total.mean[i] + 1.0)) {
      out.defined[i] = true;
      snr[i] = total.mean[i] / sd[i];
      out.snr_stderr[i] = std::sqrt((1.0 + 0.5 * snr[i] * snr[i]) / n);
      sum_mean_sq += total.mean[i] * total.mean[i];
      sum_var += var;
    } else {
      ++out.undefined_count;
    }
  }
  out.mean = Field(bundle.grid, total.mean);
  out.stddev = Field(bundle.grid, std::move(sd));
  out.snr = Field(bundle.grid, std::move(snr));
  if (sum_var > 0.0) out.flat_snr_sq = sum_mean_sq / sum_var;

  std::vector<double> ratios;
  for (const auto& m : batch) {
    double ms = 0.0, vs = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!out.defined[i]) continue;
      ms += m.mean[i] * m.mean[i];
      vs += m.variance(i);
    }
    if (vs > 0.0) ratios.push_back(ms / vs);
  }
  if (ratios.size() > 1) {
    double mu = 0.0;
    for (double r : ratios) mu += r;
    mu /= static_cast<double>(ratios.size());
    double ss = 0.0;
    for (double r : ratios) ss += (r - mu) * (r - mu);
    const double k = static_cast<double>(ratios.size());
    out.flat_snr_sq_stderr = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

MetricsReport compute_metrics(const ObjectSpec& object, const PatternSet& patterns, const BasisBundle& bundle,
                              double n_bar, const MetricsOptions& options) {
  MetricsReport rep{bundle.grid, bundle.size(), n_bar, false, false, {}, {}, {}, snr_analytic(object, patterns, bundle, n_bar),
                    {}, {}, snr_flat_measurement(patterns, n_bar), {}, {}, {}};
  auto add = [&](std::string name, double v, std::string src) { rep.scalars.push_back({std::move(name), v, std::move(src)}); };

  const auto c1 = check_condition1(bundle, options.cond1_tol);
  rep.condition1 = c1.holds;
  add("condition1_residual", c1.residual, "constant-in-span");
  if (c1.holds) {
    rep.resolution = resolution_map(bundle, options.cond1_tol);
    rep.resolution_measurement = resolution_measurement(patterns, bundle, options.cond1_tol);
    rep.flat = snr_flat(patterns, bundle, n_bar, options.cond1_tol);
    rep.iqc = iqc(object, patterns, bundle, n_bar, options.cond1_tol);
    add("f_m_mean", rep.resolution->f_mean, "sum-v-squared");
    add("resolution_measurement", *rep.resolution_measurement, "measurement-resolution");
    add("snr_flat_sq", rep.flat->snr_flat_sq, "flat-snr");
    add("form_factor_flat_sq", rep.flat->form_factor_flat_sq, "flat-form-factor");
    add("t_tilde", rep.flat->t_tilde, "average-transmission");
    add("snr_flat_bound_sq", rep.flat->bound, "orthogonal-bound");
    add("iqc_flat_sq", rep.iqc->iqc_flat_sq, "flat-iqc");
    add("iqc_dose_sq", rep.iqc->iqc_dose_sq, "dose-iqc");
  } else {
    rep.notes.push_back("constant field not in pattern span (residual " + fmt(c1.residual) +
                        "): resolution map, flat SNR and IQC omitted");
  }

  const auto c2 = check_condition2(bundle, options.shifts, options.cond2_tol);
  rep.condition2 = c2.holds;
  add("condition2_max_dev", c2.max_dev, "shift-invariance");
  if (c2.holds && c1.holds) {
    rep.resolution_uniform = resolution_uniform(bundle, options.shifts, options.cond2_tol);
    add("resolution_uniform", rep.resolution_uniform->value, "uniform-resolution");
    add("psf_width", rep.resolution_uniform->psf_width, "psf-width");
  } else if (!c2.holds) {
    rep.notes.push_back("Green's function not shift invariant (max deviation " + fmt(c2.max_dev) +
                        "): uniform resolution omitted");
  } else {
    rep.notes.push_back("uniform resolution omitted: constant field not in pattern span");
  }

  add("snr_flat_in_sq", rep.snr_flat_in_sq, "measured-flat-snr");
  add("undefined_cells", static_cast<double>(rep.snr.undefined_count), "form-factor");
  if (rep.snr.undefined_count > 0) {
    rep.notes.push_back(std::to_string(rep.snr.undefined_count) + " cells have undefined SNR (zero signal variance)");
  }

  if (options.mc_trials > 0) {
    rep.mc = snr_monte_carlo(object, patterns, bundle, n_bar, options.mc_trials, options.seed);
    add("mc_flat_snr_sq", rep.mc->flat_snr_sq, "mc");
    add("mc_flat_snr_sq_stderr", rep.mc->flat_snr_sq_stderr, "mc");
  }
  return rep;
}

}  // namespace sibucket
