#include "sibucket_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <map>
#include <ostream>

#include "sibucket/error.hpp"
#include "sibucket/field_io.hpp"
#include "sibucket/metrics.hpp"
#include "sibucket/recon.hpp"
#include "sibucket_cli/io.hpp"

#ifndef SIBUCKET_VERSION
#define SIBUCKET_VERSION "unknown"
#endif

namespace sibucket::cli {

namespace {

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(m(i, j));
  }
  return out;
}

std::string indexed(const std::string& stem, std::size_t i, int width = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%0*zu.sif", stem.c_str(), width, i);
  return buf;
}

PatternSet build_family(const GenerateOptions& o) {
  if (o.L == 0) throw ParameterError("generate: --L must be >= 1");
  switch (parse_family(o.family)) {
    case Family::pixel: return pixel_masks(o.L, o.h, o.cells == 0 ? 1 : o.cells, o.n_bar);
    case Family::two_pixel: return two_pixel_masks(o.L, o.h, o.cells == 0 ? 1 : o.cells, o.n_bar);
    case Family::harmonic: return harmonic_masks(o.L, o.A, o.cells, o.n_bar);
    case Family::pseudo_random: return pseudo_random_masks(o.L, o.t1, o.kappa, o.seed, o.count, o.A, o.n_bar);
    case Family::custom: break;
  }
  throw ParameterError("generate: family 'custom' cannot be generated");
}

// Validation gate for generated sets: bounds are a parameter problem, rank
// deficiency a numeric one.
void require_valid(const PatternSet& p, double rank_tol) {
  const ValidationReport r = validate(p, 1e-10, rank_tol);
  if (!r.bounds_ok) {
    throw ParameterError("pattern set violates 0 <= T <= 1 at " + std::to_string(r.bound_violations) + " samples");
  }
  if (r.gram_rank < p.size()) {
    throw SingularSetError("pattern set is linearly dependent: rank " + std::to_string(r.gram_rank) + " of " +
                               std::to_string(p.size()),
                           p.size() - r.gram_rank);
  }
}

double effective_n_bar(const PatternSet& p, const std::optional<double>& n_bar) {
  const double v = n_bar.value_or(p.n_bar());
  if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("n_bar must be positive");
  return v;
}

std::string condition_report(const BasisBundle& b, const Tolerances& tol) {
  const auto c1 = check_condition1(b, tol.cond1);
  const auto c2 = check_condition2(b, unit_shifts(), tol.cond2);
  KeyValue kv;
  kv.set("M", std::uint64_t{b.size()});
  kv.set("orthogonal", b.w_scale ? "yes" : "no");
  if (b.w_scale) kv.set("w", *b.w_scale);
  kv.set("condition1.holds", c1.holds ? "yes" : "no");
  kv.set("condition1.residual", c1.residual);
  std::string alpha;
  for (std::size_t m = 0; m < c1.alpha.size(); ++m) alpha += (m ? " " : "") + num(c1.alpha[m]);
  kv.set("condition1.alpha", alpha);
  kv.set("condition2.holds", c2.holds ? "yes" : "no");
  kv.set("condition2.shifts", "unit lattice shifts, clipped at the boundary");
  kv.set("condition2.max_dev", c2.max_dev);
  kv.set("condition2.pairs_checked", std::uint64_t{c2.pairs_checked});
  kv.set("f_m.min", c2.f_min);
  kv.set("f_m.max", c2.f_max);
  kv.set("f_m.mean", c2.f_mean);
  return kv.render();
}

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

void write_metrics(const fs::path& dir, const MetricsReport& r) {
  ensure_dir(dir);
  std::string csv = "name,value,source\n";
  for (const auto& s : r.scalars) csv += s.name + "," + num(s.value) + "," + s.source + "\n";
  write_atomic(dir / "metrics.csv", csv);

  write_field(dir / "snr.sif", r.snr.snr);
  write_field(dir / "form_factor.sif", r.snr.form_factor);
  std::vector<double> defined(r.snr.defined.size());
  for (std::size_t i = 0; i < defined.size(); ++i) defined[i] = r.snr.defined[i] ? 1.0 : 0.0;
  write_field(dir / "snr_defined.sif", Field(r.grid, defined));
  if (r.resolution) {
    write_field(dir / "resolution.sif", r.resolution->resolution);
    write_field(dir / "f_m.sif", r.resolution->f_m);
  }
  if (r.iqc) write_field(dir / "iqc.sif", r.iqc->map);
  if (r.mc) {
    write_field(dir / "mc_mean.sif", r.mc->mean);
    write_field(dir / "mc_stddev.sif", r.mc->stddev);
    write_field(dir / "mc_snr.sif", r.mc->snr);
    std::string se = "cell,snr,stderr,defined\n";
    for (std::size_t i = 0; i < r.mc->snr_stderr.size(); ++i) {
      se += std::to_string(i) + "," + num(r.mc->snr[i]) + "," + num(r.mc->snr_stderr[i]) + "," +
            (r.mc->defined[i] ? "1" : "0") + "\n";
    }
    write_atomic(dir / "mc_snr.csv", se);
  }

  std::string notes =
      "# Units: resolution values are lengths; width_delta2 of a 2-D kernel returns the square root of its\n"
      "# area-like squared width, so resolution^2 compares with |region| / M.\n"
      "# SNR maps are zero where the SNR is undefined (see snr_defined.sif); such cells are excluded\n"
      "# from spatial averages. The IQC map is pointwise and is never spatially averaged.\n";
  notes += "trials = " + std::to_string(r.mc ? r.mc->trials : 0) + "\n";
  notes += "undefined_cells = " + std::to_string(r.snr.undefined_count) + "\n";
  for (std::size_t i = 0; i < r.notes.size(); ++i) notes += "note." + std::to_string(i) + " = " + r.notes[i] + "\n";
  write_atomic(dir / "notes.txt", notes);
}

Field mean_field(const std::vector<Field>& fields) {
  std::vector<double> acc(fields.front().size(), 0.0);
  for (const auto& f : fields) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f[i];
  }
  for (auto& v : acc) v /= static_cast<double>(fields.size());
  return Field(fields.front().grid(), std::move(acc));
}

// Groups rows by trial, checks completeness, and recovers n_bar = a_bar / x.
struct ParsedMeasurements {
  std::vector<std::uint64_t> trials;
  std::vector<std::vector<double>> counts;
  double n_bar = 0.0;
};

ParsedMeasurements group_measurements(const std::vector<MeasurementRow>& rows, std::size_t M, const std::string& origin) {
  std::map<std::uint64_t, std::vector<std::optional<double>>> by_trial;
  double sum_x = 0.0, sum_abar = 0.0;
  for (const auto& r : rows) {
    if (r.m >= M) throw StructuralError(origin + ": pattern index " + std::to_string(r.m) + " out of range");
    auto& slot = by_trial[r.trial];
    if (slot.empty()) slot.resize(M);
    if (slot[r.m]) throw StructuralError(origin + ": duplicate row for trial " + std::to_string(r.trial));
    slot[r.m] = static_cast<double>(r.a);
    if (r.trial == rows.front().trial) {
      sum_x += r.x;
      sum_abar += r.a_bar;
    }
  }
  if (by_trial.empty()) throw StructuralError(origin + ": no measurements");
  ParsedMeasurements out;
  for (auto& [t, slot] : by_trial) {
    std::vector<double> c;
    for (std::size_t m = 0; m < M; ++m) {
      if (!slot[m]) throw StructuralError(origin + ": trial " + std::to_string(t) + " lacks pattern " + std::to_string(m));
      c.push_back(*slot[m]);
    }
    out.trials.push_back(t);
    out.counts.push_back(std::move(c));
  }
  out.n_bar = sum_x > 0.0 ? sum_abar / sum_x : 0.0;
  return out;
}

}  // namespace

const char* version() { return SIBUCKET_VERSION; }

void cmd_generate(const GenerateOptions& o, std::ostream& log) {
  const PatternSet p = build_family(o);
  require_valid(p, 1e-10);
  write_patterns(o.out, p);
  log << "generated " << p.size() << " " << to_string(p.family()) << " masks on a " << p.grid().nx() << "x"
      << p.grid().ny() << " grid in " << o.out.string() << "\n";
}

void cmd_basis(const BasisOptions& o, std::ostream& log) {
  const PatternSet p = read_patterns(o.patterns);
  const BasisBundle b = biorthogonal(p, o.tol.rank);
  ensure_dir(o.out);
  write_matrix_csv(o.out / "Q.csv", rows_of(b.Q));
  write_matrix_csv(o.out / "Q2.csv", rows_of(b.Q2));
  write_matrix_csv(o.out / "gram.csv", rows_of(gram(p).entries()));
  for (std::size_t m = 0; m < b.size(); ++m) {
    write_field(o.out / indexed("V", m), b.V[m]);
    write_field(o.out / indexed("U", m), b.U[m]);
  }
  write_atomic(o.out / "conditions.txt", condition_report(b, o.tol));
  log << "basis for " << b.size() << " patterns written to " << o.out.string() << "\n";
}

void cmd_measure(const MeasureOptions& o, std::ostream& log) {
  const PatternSet p = read_patterns(o.patterns);
  const double n_bar = effective_n_bar(p, o.n_bar);
  if (o.trials == 0) throw ParameterError("measure: --trials must be >= 1");
  const ObjectSpec obj = load_object(o.object, p.grid());
  const auto records = run_trials(obj, p.with_n_bar(n_bar), o.trials, o.seed);
  if (o.out.has_parent_path()) ensure_dir(o.out.parent_path());
  write_measurements(o.out, records);
  log << o.trials << " trial(s) of " << p.size() << " buckets written to " << o.out.string() << "\n";
}

void cmd_reconstruct(const ReconstructOptions& o, std::ostream& log) {
  const PatternSet p = read_patterns(o.patterns);
  const auto parsed = group_measurements(read_measurements(o.measurements), p.size(), o.measurements.string());
  const PatternSet scaled = parsed.n_bar > 0.0 ? p.with_n_bar(parsed.n_bar) : p;
  const BasisBundle b = biorthogonal(scaled, o.tol.rank);
  ensure_dir(o.out);
  std::vector<Field> recon;
  recon.reserve(parsed.counts.size());
  for (std::size_t k = 0; k < parsed.counts.size(); ++k) {
    recon.push_back(reconstruct(parsed.counts[k], b));
    char name[48];
    std::snprintf(name, sizeof name, "recon_trial_%06llu.sif", static_cast<unsigned long long>(parsed.trials[k]));
    write_field(o.out / name, recon.back());
  }
  write_field(o.out / "recon_mean.sif", mean_field(recon));
  log << recon.size() << " reconstruction(s) written to " << o.out.string() << "\n";
}

void cmd_metrics(const MetricsCommandOptions& o, std::ostream& log) {
  const PatternSet p0 = read_patterns(o.patterns);
  const double n_bar = effective_n_bar(p0, o.n_bar);
  const PatternSet p = p0.with_n_bar(n_bar);
  const ObjectSpec obj = load_object(o.object, p.grid());
  const BasisBundle b = biorthogonal(p, o.tol.rank);
  MetricsOptions mo;
  mo.cond1_tol = o.tol.cond1;
  mo.cond2_tol = o.tol.cond2;
  mo.mc_trials = o.trials;
  mo.seed = o.seed;
  const MetricsReport r = compute_metrics(obj, p, b, n_bar, mo);
  write_metrics(o.out, r);
  for (const auto& n : r.notes) log << "note: " << n << "\n";
  log << r.scalars.size() << " scalars written to " << (o.out / "metrics.csv").string() << "\n";
}

void cmd_classify(const ClassifyOptions& o, std::ostream& log) {
  ReconMatrix rm;
  if (!o.matrix.empty()) {
    const auto rows = read_matrix_csv(o.matrix);
    if (rows.empty()) throw ParameterError("classify: empty matrix");
    Matrix r(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ParameterError("classify: matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    rm.r = std::move(r);
  } else if (!o.patterns.empty()) {
    rm = recon_matrix(biorthogonal(read_patterns(o.patterns)));
  } else {
    throw ParameterError("classify: give --patterns or --matrix");
  }
  const ReconMatrix c = classify(std::move(rm), o.tol);
  KeyValue kv;
  kv.set("label", to_string(c.label));
  kv.set("evidence", c.evidence);
  log << kv.render();
  if (!o.out.empty()) write_atomic(o.out, kv.render());
}

void cmd_pipeline(const PipelineOptions& o, std::ostream& log) {
  static const char* const known[] = {"family", "L", "h", "A", "t1", "kappa", "pattern_seed", "cells", "count",
                                      "object", "n_bar", "trials", "seed", "out", "rank_tol", "cond1_tol",
                                      "cond2_tol", "mc_trials"};
  const KeyValue cfg = KeyValue::load(o.config, true);
  for (const auto& [k, v] : cfg.entries()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ParameterError(o.config.string() + ": unknown key '" + k + "'");
  }

  GenerateOptions g;
  g.family = cfg.get("family");
  g.L = cfg.get_uint("L");
  if (auto v = cfg.find("h")) g.h = parse_double(*v, "h");
  if (auto v = cfg.find("A")) g.A = parse_double(*v, "A");
  if (auto v = cfg.find("t1")) g.t1 = parse_double(*v, "t1");
  if (auto v = cfg.find("kappa")) g.kappa = parse_double(*v, "kappa");
  if (auto v = cfg.find("pattern_seed")) g.seed = parse_uint(*v, "pattern_seed");
  if (auto v = cfg.find("cells")) g.cells = parse_uint(*v, "cells");
  if (auto v = cfg.find("count")) g.count = parse_uint(*v, "count");
  const double n_bar = cfg.has("n_bar") ? cfg.get_double("n_bar") : 1.0;
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw ParameterError("n_bar must be positive");
  g.n_bar = n_bar;
  const std::size_t trials = cfg.has("trials") ? cfg.get_uint("trials") : 1;
  if (trials == 0) throw ParameterError("trials must be >= 1");
  const std::size_t mc_trials = cfg.has("mc_trials") ? cfg.get_uint("mc_trials") : 0;
  if (mc_trials != 0 && mc_trials < 100) throw ParameterError("mc_trials must be 0 or >= 100");
  const std::uint64_t seed = cfg.has("seed") ? cfg.get_uint("seed") : 0;
  const std::string object = cfg.find("object").value_or("builtin:flat");
  Tolerances tol;
  if (auto v = cfg.find("rank_tol")) tol.rank = parse_double(*v, "rank_tol");
  if (auto v = cfg.find("cond1_tol")) tol.cond1 = parse_double(*v, "cond1_tol");
  if (auto v = cfg.find("cond2_tol")) tol.cond2 = parse_double(*v, "cond2_tol");
  fs::path out;
  if (o.out) out = *o.out;
  else if (auto v = cfg.find("out")) out = o.config.parent_path() / *v;
  else throw ParameterError(o.config.string() + ": no output directory ('out' key or --out)");

  // Everything is validated before any stage writes.
  const PatternSet patterns = build_family(g);
  require_valid(patterns, tol.rank);
  const ObjectSpec obj = load_object(object, patterns.grid());

  ensure_dir(out);
  KeyValue manifest;
  manifest.set("format", "sibucket-run 1");
  manifest.set("version", version());
  for (const auto& [k, v] : cfg.entries()) manifest.set("config." + k, v);
  Clock clock;

  g.out = out / "patterns";
  write_patterns(g.out, patterns);
  log << "generated " << patterns.size() << " " << to_string(patterns.family()) << " masks in " << g.out.string()
      << "\n";
  manifest.set("timing.generate_s", clock.lap());

  const BasisOptions bo{g.out, out / "basis", tol};
  cmd_basis(bo, log);
  manifest.set("timing.basis_s", clock.lap());

  // Noiseless pre-pass: the flat object must come back as 1 when the
  // constant field lies in the pattern span.
  {
    const BasisBundle b = biorthogonal(patterns, tol.rank);
    const auto c1 = check_condition1(b, tol.cond1);
    const Field flat = reconstruct(bucket_means(ObjectSpec::flat(patterns.grid()), patterns), b);
    double dev = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) dev = std::max(dev, std::abs(flat[i] - 1.0));
    manifest.set("preflight.condition1", c1.holds ? "yes" : "no");
    manifest.set("preflight.flat_max_dev", dev);
    if (c1.holds && dev > 1e-9) throw ConditionError("preflight: noiseless flat reconstruction deviates by " + num(dev));
  }
  manifest.set("timing.preflight_s", clock.lap());

  MeasureOptions mo{out / "patterns", object, n_bar, trials, seed, out / "measurements.csv"};
  cmd_measure(mo, log);
  manifest.set("timing.measure_s", clock.lap());

  ReconstructOptions ro{out / "patterns", out / "measurements.csv", out / "recon", tol};
  cmd_reconstruct(ro, log);
  manifest.set("timing.reconstruct_s", clock.lap());

  MetricsCommandOptions mc{out / "patterns", object, n_bar, mc_trials, seed, out / "metrics", tol};
  cmd_metrics(mc, log);
  manifest.set("timing.metrics_s", clock.lap());

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_regular_file() && e.path().filename() != "run_manifest.txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) manifest.set("checksum." + fs::relative(f, out).generic_string(), checksum(f));
  write_atomic(out / "run_manifest.txt", manifest.render());
  log << "run manifest written to " << (out / "run_manifest.txt").string() << "\n";
}

}  // namespace sibucket::cli
