#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace sibucket::cli {

namespace fs = std::filesystem;

struct Tolerances {
  double rank = 1e-10;
  double cond1 = 1e-9;
  double cond2 = 1e-9;
};

struct GenerateOptions {
  std::string family;
  std::size_t L = 0;
  double h = 1.0;
  double A = 1.0;
  double t1 = 0.5;
  double kappa = 2.0;
  std::uint64_t seed = 0;
  std::size_t cells = 0;  ///< cells per pixel (pixel families) or per axis (harmonic); 0 = family default
  std::size_t count = 0;  ///< pseudo-random only; 0 = L^2
  double n_bar = 1.0;
  fs::path out;
};

struct BasisOptions {
  fs::path patterns;
  fs::path out;
  Tolerances tol;
};

struct MeasureOptions {
  fs::path patterns;
  std::string object = "builtin:flat";
  std::optional<double> n_bar;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  fs::path out;
};

struct ReconstructOptions {
  fs::path patterns;
  fs::path measurements;
  fs::path out;
  Tolerances tol;
};

struct MetricsCommandOptions {
  fs::path patterns;
  std::string object = "builtin:flat";
  std::optional<double> n_bar;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  fs::path out;
  Tolerances tol;
};

struct ClassifyOptions {
  fs::path patterns;
  fs::path matrix;
  double tol = 1e-9;
  fs::path out;
};

struct ReproduceOptions {
  std::string scenario = "all";
  fs::path out;
  std::size_t trials = 10000;
  std::uint64_t seed = 2024;
  std::optional<double> rtol;     ///< overrides every analytic tolerance
  std::optional<double> mc_rtol;  ///< overrides Monte Carlo tolerances
};

struct PipelineOptions {
  fs::path config;
  std::optional<fs::path> out;
};

// Each command throws sibucket::Error subclasses on failure; the exit code
// follows Error::exit_code(). Commands returning int report 1 when a
// comparison fails.
void cmd_generate(const GenerateOptions& o, std::ostream& log);
void cmd_basis(const BasisOptions& o, std::ostream& log);
void cmd_measure(const MeasureOptions& o, std::ostream& log);
void cmd_reconstruct(const ReconstructOptions& o, std::ostream& log);
void cmd_metrics(const MetricsCommandOptions& o, std::ostream& log);
void cmd_classify(const ClassifyOptions& o, std::ostream& log);
int cmd_reproduce(const ReproduceOptions& o, std::ostream& log);
void cmd_pipeline(const PipelineOptions& o, std::ostream& log);

/// Version string compiled into the tool.
const char* version();

}  // namespace sibucket::cli
