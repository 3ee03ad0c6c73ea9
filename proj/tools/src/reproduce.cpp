#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "sibucket/error.hpp"
#include "sibucket/metrics.hpp"
#include "sibucket/recon.hpp"
#include "sibucket_cli/commands.hpp"
#include "sibucket_cli/io.hpp"

namespace sibucket::cli {

namespace {

struct Row {
  std::string quantity;
  double computed;
  double expected;
  double rel_err;
  bool pass;
};

class Table {
 public:
  Table(const ReproduceOptions& o, std::ostream& log) : opt_(o), log_(log) {}

  void analytic(const std::string& scenario, const std::string& q, double got, double want, double tol = 1e-9) {
    add(scenario, q, got, want, opt_.rtol.value_or(tol));
  }
  void monte_carlo(const std::string& scenario, const std::string& q, double got, double want, double tol) {
    add(scenario, q, got, want, opt_.mc_rtol.value_or(tol));
  }
  void flag(const std::string& scenario, const std::string& q, bool ok) { add(scenario, q, ok ? 1.0 : 0.0, 1.0, 0.0); }
  void failure(const std::string& scenario, const std::string& what) {
    rows_.push_back({scenario + ": stage failed (" + sanitize(what) + ")", NAN, NAN, NAN, false});
    log_ << "FAIL " << rows_.back().quantity << "\n";
  }

  bool all_pass() const {
    for (const auto& r : rows_) {
      if (!r.pass) return false;
    }
    return !rows_.empty();
  }
  std::size_t size() const { return rows_.size(); }

  std::string csv() const {
    std::string s = "quantity,computed,expected,rel_err,pass\n";
    for (const auto& r : rows_) {
      s += r.quantity + "," + num(r.computed) + "," + num(r.expected) + "," + num(r.rel_err) + "," +
           (r.pass ? "1" : "0") + "\n";
    }
    return s;
  }

 private:
  static std::string sanitize(std::string s) {
    for (char& c : s) {
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
  }

  void add(const std::string& scenario, const std::string& q, double got, double want, double tol) {
    const double err = want != 0.0 ? std::abs(got - want) / std::abs(want) : std::abs(got - want);
    const bool pass = std::isfinite(err) && err <= tol;
    rows_.push_back({scenario + ": " + sanitize(q), got, want, err, pass});
    char line[96];
    std::snprintf(line, sizeof line, "%s %.12g vs %.12g (rel err %.3g, tol %.3g)", pass ? "PASS" : "FAIL", got, want,
                  err, tol);
    log_ << line << "  " << rows_.back().quantity << "\n";
  }

  const ReproduceOptions& opt_;
  std::ostream& log_;
  std::vector<Row> rows_;
};

double t_sum(const PatternSet& p) {
  double s = 0.0;
  for (const auto& t : p.masks()) s += spatial_mean(t);
  return s;
}

void pixel(Table& t, const ReproduceOptions& o) {
  const std::string s = "pixel";
  const double n_bar = 1e4, h = 1.0;
  const PatternSet p = pixel_masks(5, h, 1, n_bar);
  const BasisBundle b = biorthogonal(p);
  const ResolutionMap r = resolution_map(b);
  t.analytic(s, "resolution min vs h", r.resolution.min(), h);
  t.analytic(s, "resolution max vs h", r.resolution.max(), h);
  const ObjectSpec flat = ObjectSpec::flat(p.grid());
  const IqcResult q = iqc(flat, p, b, n_bar);
  t.analytic(s, "Q^2 flat vs 1/25", q.iqc_flat_sq, 1.0 / 25.0);
  t.analytic(s, "dose Q^2 vs 1", q.iqc_dose_sq, 1.0);
  const FlatSnr f = snr_flat(p, b, n_bar);
  const double N = 25.0 * n_bar;
  t.analytic(s, "flat SNR^2 vs N/625", f.snr_flat_sq, N / 625.0);
  if (o.trials > 0) {
    const MonteCarloSnr mc = snr_monte_carlo(flat, p, b, n_bar, o.trials, o.seed);
    t.monte_carlo(s, "Monte Carlo flat SNR^2 vs N/625", mc.flat_snr_sq, N / 625.0, 0.03);
  }
  const ReconMatrix c = classify(recon_matrix(b));
  t.flag(s, "reconstruction matrix class I", c.label == ReconClass::I);
}

void two_pixel(Table& t, const ReproduceOptions&) {
  const std::string s = "two-pixel";
  const PatternSet p = two_pixel_masks(5);
  const double M = static_cast<double>(p.size());
  const BasisBundle b = biorthogonal(p);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const double v = inner(b.S(m), b.S(m));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  t.analytic(s, "min ||S_m||^2 vs M^2/4", lo, M * M / 4.0);
  t.analytic(s, "max ||S_m||^2 vs M^2/4", hi, M * M / 4.0);
  t.analytic(s, "sum t_m vs 2", t_sum(p), 2.0);
  const IqcResult q = iqc(ObjectSpec::flat(p.grid()), p, b, 1.0);
  t.analytic(s, "Q^2 flat vs 2/625", q.iqc_flat_sq, 2.0 / 625.0);
  t.analytic(s, "dose Q^2 vs 1/25", q.iqc_dose_sq, 1.0 / 25.0);
  const ReconMatrix c = classify(recon_matrix(b));
  t.flag(s, "reconstruction matrix class III", c.label == ReconClass::III);
}

void harmonic(Table& t, const ReproduceOptions& o) {
  const std::string s = "harmonic";
  const double n_bar = 1e6;
  const PatternSet p = harmonic_masks(3, 1.0, 12, n_bar);
  const double M = static_cast<double>(p.size()), area = p.grid().area();
  const BasisBundle b = biorthogonal(p);
  const ResolutionMap r = resolution_map(b);
  t.analytic(s, "min sum V_m^2 vs M", r.f_m.min(), M);
  t.analytic(s, "max sum V_m^2 vs M", r.f_m.max(), M);
  t.analytic(s, "resolution^2 vs |region|/M", r.resolution.max() * r.resolution.max(), area / M);
  const UniformResolution u = resolution_uniform(b);
  t.analytic(s, "uniform resolution^2 vs |region|/M", u.value * u.value, area / M);
  const FlatSnr f = snr_flat(p, b, n_bar);
  t.analytic(s, "Q^2 flat vs 3/324", f.form_factor_flat_sq, 3.0 / 324.0);
  if (o.trials > 0) {
    const MonteCarloSnr mc = snr_monte_carlo(ObjectSpec::flat(p.grid()), p, b, n_bar, o.trials, o.seed + 1);
    t.monte_carlo(s, "Monte Carlo flat SNR^2 vs n_bar (3/324)", mc.flat_snr_sq, n_bar * 3.0 / 324.0, 0.05);
  }
  const ReconMatrix c = classify(recon_matrix(b));
  t.flag(s, "reconstruction matrix class III", c.label == ReconClass::III);
}

void pseudo_random(Table& t, const ReproduceOptions&) {
  const std::string s = "pseudo-random";
  const double t1 = 0.5, kappa = 2.0, sigma = t1 / kappa;
  const PatternSet p = pseudo_random_masks(4, t1, kappa, 7);
  double resid = 0.0;
  for (std::size_t a = 1; a < p.size(); ++a) {
    for (std::size_t k = 1; k < p.size(); ++k) {
      const double cov = inner(p.mask(a) - p.mask(0), p.mask(k) - p.mask(0));
      resid = std::max(resid, std::abs(cov - (a == k ? sigma * sigma : 0.0)));
    }
  }
  t.analytic(s, "second-order constraint residual", resid, 0.0, 1e-12);
  const BasisBundle b = biorthogonal(p);
  const FlatSnr f = snr_flat(p, b, 1.0);
  t.analytic(s, "Q^2 flat vs 0.5/121", f.form_factor_flat_sq, 0.5 / 121.0);
  const UniformResolution u = resolution_uniform(b);
  t.analytic(s, "PSF width^2 vs |region|/16", u.psf_width * u.psf_width, p.grid().area() / 16.0, 1e-6);
  const ReconMatrix c = classify(recon_matrix(b));
  t.flag(s, "reconstruction matrix class III", c.label == ReconClass::III);
}

void classes(Table& t, const ReproduceOptions&) {
  const std::string s = "classes";
  Matrix rot(2, 2), avg(2, 2), diff(2, 2);
  rot << 1, 1, -1, 1;
  avg << 1, 0, 0.5, 0.5;
  diff << 1, 0, -1, 2;
  auto label = [](const Matrix& m) { return classify({m, ReconClass::unclassified, {}}).label; };
  t.flag(s, "(1 1; -1 1) labelled I", label(rot) == ReconClass::I);
  t.flag(s, "(1 0; 1/2 1/2) labelled II", label(avg) == ReconClass::II);
  t.flag(s, "(1 0; -1 2) labelled III", label(diff) == ReconClass::III);
}

}  // namespace

int cmd_reproduce(const ReproduceOptions& o, std::ostream& log) {
  using Runner = std::function<void(Table&, const ReproduceOptions&)>;
  const std::vector<std::pair<std::string, Runner>> all = {
      {"pixel", pixel}, {"two-pixel", two_pixel}, {"harmonic", harmonic}, {"pseudo-random", pseudo_random},
      {"classes", classes}};
  std::vector<std::pair<std::string, Runner>> chosen;
  for (const auto& e : all) {
    if (o.scenario == "all" || o.scenario == e.first) chosen.push_back(e);
  }
  if (chosen.empty()) throw ParameterError("reproduce: unknown scenario '" + o.scenario + "'");
  if (o.trials != 0 && o.trials < 100) throw ParameterError("reproduce: --trials must be 0 or >= 100");

  ensure_dir(o.out);
  const fs::path csv = o.out / "reproduce.csv";
  Table table(o, log);
  for (const auto& [name, run] : chosen) {
    try {
      run(table, o);
    } catch (const Error& e) {
      table.failure(name, e.what());
    }
    write_atomic(csv, table.csv());
  }
  log << (table.all_pass() ? "all " : "NOT all ") << table.size() << " checks passed; table in " << csv.string()
      << "\n";
  return table.all_pass() ? 0 : 1;
}

}  // namespace sibucket::cli
