#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sibucket/patterns.hpp"
#include "sibucket/sim.hpp"

namespace sibucket::cli {

namespace fs = std::filesystem;

/// "%.17g"
std::string num(double v);

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; keys are unique.
class KeyValue {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value) { set(key, num(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return order_; }

  std::string render() const;
  /// Syntax errors raise ParameterError when `is_config`, IoError otherwise.
  static KeyValue parse(const std::string& text, const std::string& origin, bool is_config);
  static KeyValue load(const fs::path& path, bool is_config);

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> order_;
};

double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_uint(const std::string& text, const std::string& what);

/// Writes to a sibling temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);
void ensure_dir(const fs::path& dir);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string checksum(const fs::path& path);

void write_matrix_csv(const fs::path& path, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_matrix_csv(const fs::path& path);

/// Pattern directory: manifest.txt plus mask_NNNN.sif per mask.
void write_patterns(const fs::path& dir, const PatternSet& patterns);
PatternSet read_patterns(const fs::path& dir);
std::string mask_file_name(std::size_t m);

/// "builtin:flat", "builtin:pixel-step" or a SIFIELD1 path on the pattern grid.
ObjectSpec load_object(const std::string& spec, const Grid& grid);

struct MeasurementRow {
  std::uint64_t trial = 0;
  std::size_t m = 0;
  double x = 0.0;
  double a_bar = 0.0;
  std::uint64_t a = 0;
};

void write_measurements(const fs::path& path, const std::vector<MeasurementRecord>& records);
std::vector<MeasurementRow> read_measurements(const fs::path& path);

}  // namespace sibucket::cli
