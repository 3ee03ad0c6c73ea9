#include "sibucket_cli/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sibucket/error.hpp"
#include "sibucket/field_io.hpp"

namespace sibucket::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '.' || c == '/' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParameterError(what + ": not a number: '" + text + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  if (t.empty() || t[0] == '-') throw ParameterError(what + ": not a non-negative integer: '" + text + "'");
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParameterError(what + ": not a non-negative integer: '" + text + "'");
  }
  return v;
}

void KeyValue::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) order_.emplace_back(key, value);
  else {
    for (auto& kv : order_) {
      if (kv.first == key) kv.second = value;
    }
  }
  values_[key] = value;
}

const std::string& KeyValue::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParameterError("missing key '" + key + "'");
  return it->second;
}

std::optional<std::string> KeyValue::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValue::get_double(const std::string& key) const { return parse_double(get(key), key); }
std::uint64_t KeyValue::get_uint(const std::string& key) const { return parse_uint(get(key), key); }

std::string KeyValue::render() const {
  std::string out;
  for (const auto& [k, v] : order_) out += k + " = " + v + "\n";
  return out;
}

KeyValue KeyValue::parse(const std::string& text, const std::string& origin, bool is_config) {
  auto fail = [&](std::size_t line, const std::string& why) -> void {
    const std::string msg = origin + ":" + std::to_string(line) + ": " + why;
    if (is_config) throw ParameterError(msg);
    throw IoError(msg);
  };
  KeyValue kv;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) fail(line, "invalid key '" + key + "'");
    if (kv.has(key)) fail(line, "duplicate key '" + key + "'");
    kv.set(key, trim(s.substr(eq + 1)));
  }
  return kv;
}

KeyValue KeyValue::load(const fs::path& path, bool is_config) {
  return parse(read_text(path), path.string(), is_config);
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_matrix_csv(const fs::path& path, const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) s += (j ? "," : "") + num(r[j]);
    s += "\n";
  }
  write_atomic(path, s);
}

std::vector<std::vector<double>> read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::vector<double> r;
    for (const auto& cell : split(line, ',')) r.push_back(parse_double(cell, path.string()));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string mask_file_name(std::size_t m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mask_%04zu.sif", m);
  return buf;
}

void write_patterns(const fs::path& dir, const PatternSet& p) {
  ensure_dir(dir);
  for (std::size_t m = 0; m < p.size(); ++m) write_field(dir / mask_file_name(m), p.mask(m));
  KeyValue kv;
  kv.set("format", "sibucket-patterns 1");
  kv.set("family", to_string(p.family()));
  kv.set("M", std::uint64_t{p.size()});
  kv.set("n_bar", p.n_bar());
  kv.set("nx", std::uint64_t{p.grid().nx()});
  kv.set("ny", std::uint64_t{p.grid().ny()});
  kv.set("width_x", p.grid().width_x());
  kv.set("width_y", p.grid().width_y());
  const FamilyParams& fp = p.params();
  if (fp.L) kv.set("L", std::uint64_t{*fp.L});
  if (fp.h) kv.set("h", *fp.h);
  if (fp.A) kv.set("A", *fp.A);
  if (fp.t1) kv.set("t1", *fp.t1);
  if (fp.kappa) kv.set("kappa", *fp.kappa);
  if (fp.seed) kv.set("seed", *fp.seed);
  if (fp.cells_per_pixel) kv.set("cells_per_pixel", std::uint64_t{*fp.cells_per_pixel});
  write_atomic(dir / "manifest.txt", kv.render());
}

PatternSet read_patterns(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("pattern directory not found: " + dir.string());
  const KeyValue kv = KeyValue::load(dir / "manifest.txt", false);
  if (kv.get("format") != "sibucket-patterns 1") throw IoError(dir.string() + ": unsupported pattern manifest");
  const auto M = static_cast<std::size_t>(kv.get_uint("M"));
  if (M == 0) throw IoError(dir.string() + ": manifest lists no masks");
  const Grid grid(kv.get_uint("nx"), kv.get_uint("ny"), kv.get_double("width_x"), kv.get_double("width_y"));
  std::vector<Field> masks;
  masks.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    Field f = read_field(dir / mask_file_name(m));
    if (!(f.grid() == grid)) throw IoError(mask_file_name(m) + ": grid differs from the manifest");
    masks.push_back(std::move(f));
  }
  FamilyParams fp;
  if (auto v = kv.find("L")) fp.L = parse_uint(*v, "L");
  if (auto v = kv.find("h")) fp.h = parse_double(*v, "h");
  if (auto v = kv.find("A")) fp.A = parse_double(*v, "A");
  if (auto v = kv.find("t1")) fp.t1 = parse_double(*v, "t1");
  if (auto v = kv.find("kappa")) fp.kappa = parse_double(*v, "kappa");
  if (auto v = kv.find("seed")) fp.seed = parse_uint(*v, "seed");
  if (auto v = kv.find("cells_per_pixel")) fp.cells_per_pixel = parse_uint(*v, "cells_per_pixel");
  return PatternSet(std::move(masks), kv.get_double("n_bar"), parse_family(kv.get("family")), fp);
}

ObjectSpec load_object(const std::string& spec, const Grid& grid) {
  if (spec == "builtin:flat") return ObjectSpec::flat(grid);
  if (spec == "builtin:pixel-step") return ObjectSpec::step(grid, 0.5);
  if (spec.rfind("builtin:", 0) == 0) throw ParameterError("unknown builtin object '" + spec + "'");
  Field f = read_field(spec);
  require_same_grid(f.grid(), grid, "object");
  return ObjectSpec(std::move(f), fs::path(spec).filename().string());
}

void write_measurements(const fs::path& path, const std::vector<MeasurementRecord>& records) {
  std::string s = "trial,m,x_m,a_bar_m,a_m\n";
  for (const auto& r : records) {
    for (std::size_t m = 0; m < r.size(); ++m) {
      s += std::to_string(r.trial) + "," + std::to_string(m) + "," + num(r.x[m]) + "," + num(r.a_bar[m]) + "," +
           std::to_string(r.a.at(m)) + "\n";
    }
  }
  write_atomic(path, s);
}

std::vector<MeasurementRow> read_measurements(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "trial,m,x_m,a_bar_m,a_m") {
    throw IoError(path.string() + ": expected header 'trial,m,x_m,a_bar_m,a_m'");
  }
  std::vector<MeasurementRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 5) throw IoError(path.string() + ":" + std::to_string(n) + ": expected 5 columns");
    try {
      rows.push_back({parse_uint(c[0], "trial"), static_cast<std::size_t>(parse_uint(c[1], "m")),
                      parse_double(c[2], "x_m"), parse_double(c[3], "a_bar_m"), parse_uint(c[4], "a_m")});
    } catch (const ParameterError& e) {
      throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace sibucket::cli
