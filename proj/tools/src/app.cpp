#include "sibucket_cli/app.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <ostream>

#include "sibucket/error.hpp"
#include "sibucket_cli/commands.hpp"

namespace sibucket::cli {

namespace {

void add_tolerances(CLI::App* cmd, Tolerances& tol) {
  cmd->add_option("--rank-tol", tol.rank, "relative Gram eigenvalue gate")->capture_default_str();
  cmd->add_option("--cond1-tol", tol.cond1, "constant-in-span residual tolerance")->capture_default_str();
  cmd->add_option("--cond2-tol", tol.cond2, "shift-invariance tolerance")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bucket-detector imaging with structured illumination"};
  app.set_version_flag("--version", std::string("sibucket ") + version());
  app.require_subcommand(1);

  std::function<int()> action;

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "write a pattern set directory");
  g->add_option("--family", gen.family, "pixel, two-pixel, harmonic or pseudo-random")->required();
  g->add_option("--L", gen.L, "patterns per axis")->required();
  g->add_option("--pixel-size", gen.h, "pixel edge length h")->capture_default_str();
  g->add_option("--A", gen.A, "region edge length (harmonic, pseudo-random)")->capture_default_str();
  g->add_option("--t1", gen.t1, "mean transmission (pseudo-random)")->capture_default_str();
  g->add_option("--kappa", gen.kappa, "t1 / sigma (pseudo-random)")->capture_default_str();
  g->add_option("--seed", gen.seed, "pattern seed (pseudo-random)")->capture_default_str();
  g->add_option("--cells", gen.cells, "cells per pixel, or cells per axis for harmonic; 0 picks the default");
  g->add_option("--count", gen.count, "number of pseudo-random masks; 0 means L^2");
  g->add_option("--nbar", gen.n_bar, "mean photons per exposure")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->required();
  g->callback([&] { action = [&] { cmd_generate(gen, out); return 0; }; });

  BasisOptions bas;
  auto* b = app.add_subcommand("basis", "orthonormal and biorthogonal bases of a pattern set");
  b->add_option("--patterns", bas.patterns)->required();
  b->add_option("--out", bas.out)->required();
  add_tolerances(b, bas.tol);
  b->callback([&] { action = [&] { cmd_basis(bas, out); return 0; }; });

  MeasureOptions mea;
  double mea_nbar = 0.0;
  auto* m = app.add_subcommand("measure", "simulate Poisson bucket counts");
  m->add_option("--patterns", mea.patterns)->required();
  m->add_option("--object", mea.object, "field file, builtin:flat or builtin:pixel-step")->capture_default_str();
  auto* m_nbar = m->add_option("--nbar", mea_nbar, "mean photons per exposure (default: from the manifest)");
  m->add_option("--trials", mea.trials)->capture_default_str();
  m->add_option("--seed", mea.seed)->capture_default_str();
  m->add_option("--out", mea.out, "CSV file")->required();
  m->callback([&] {
    if (m_nbar->count() > 0) mea.n_bar = mea_nbar;
    action = [&] { cmd_measure(mea, out); return 0; };
  });

  ReconstructOptions rec;
  auto* r = app.add_subcommand("reconstruct", "reconstruct objects from measured counts");
  r->add_option("--patterns", rec.patterns)->required();
  r->add_option("--measurements", rec.measurements, "CSV written by measure")->required();
  r->add_option("--out", rec.out)->required();
  add_tolerances(r, rec.tol);
  r->callback([&] { action = [&] { cmd_reconstruct(rec, out); return 0; }; });

  MetricsCommandOptions met;
  double met_nbar = 0.0;
  auto* q = app.add_subcommand("metrics", "resolution, SNR and IQC");
  q->add_option("--patterns", met.patterns)->required();
  q->add_option("--object", met.object)->capture_default_str();
  auto* q_nbar = q->add_option("--nbar", met_nbar, "mean photons per exposure (default: from the manifest)");
  q->add_option("--trials", met.trials, "Monte Carlo trials; 0 disables, otherwise >= 100")->capture_default_str();
  q->add_option("--seed", met.seed)->capture_default_str();
  q->add_option("--out", met.out)->required();
  add_tolerances(q, met.tol);
  q->callback([&] {
    if (q_nbar->count() > 0) met.n_bar = met_nbar;
    action = [&] { cmd_metrics(met, out); return 0; };
  });

  ClassifyOptions cla;
  auto* c = app.add_subcommand("classify", "label a reconstruction matrix I, II or III");
  auto* c_pat = c->add_option("--patterns", cla.patterns);
  auto* c_mat = c->add_option("--matrix", cla.matrix, "square CSV matrix");
  c_pat->excludes(c_mat);
  c->add_option("--tol", cla.tol)->capture_default_str();
  c->add_option("--out", cla.out, "also write the result to this file");
  c->callback([&] { action = [&] { cmd_classify(cla, out); return 0; }; });

  ReproduceOptions rep;
  double rep_rtol = 0.0, rep_mc_rtol = 0.0;
  auto* p = app.add_subcommand("reproduce", "compare canonical scenarios with closed forms");
  p->add_option("--scenario", rep.scenario)
      ->check(CLI::IsMember({"pixel", "two-pixel", "harmonic", "pseudo-random", "classes", "all"}))
      ->capture_default_str();
  p->add_option("--out", rep.out)->required();
  p->add_option("--trials", rep.trials, "Monte Carlo trials; 0 skips those rows")->capture_default_str();
  p->add_option("--seed", rep.seed)->capture_default_str();
  auto* p_rtol = p->add_option("--rtol", rep_rtol, "override every analytic tolerance");
  auto* p_mc = p->add_option("--mc-rtol", rep_mc_rtol, "override Monte Carlo tolerances");
  p->callback([&] {
    if (p_rtol->count() > 0) rep.rtol = rep_rtol;
    if (p_mc->count() > 0) rep.mc_rtol = rep_mc_rtol;
    action = [&] { return cmd_reproduce(rep, out); };
  });

  PipelineOptions pip;
  std::filesystem::path pip_out;
  auto* l = app.add_subcommand("pipeline", "generate, basis, measure, reconstruct and metrics from a config file");
  l->add_option("--config", pip.config)->required();
  auto* l_out = l->add_option("--out", pip_out, "overrides the config's out key");
  l->callback([&] {
    if (l_out->count() > 0) pip.out = pip_out;
    action = [&] { cmd_pipeline(pip, out); return 0; };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "sibucket " << version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return 3;
  }
}

}  // namespace sibucket::cli
