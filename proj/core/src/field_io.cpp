#include "sibucket/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "sibucket/error.hpp"

namespace sibucket {

namespace {

constexpr const char* kMagic = "SIFIELD1";

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void write_field(const std::filesystem::path& path, const Field& field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const Grid& g = field.grid();
  char header[256];
  std::snprintf(header, sizeof(header), "%s %zu %zu %.17g %.17g\n", kMagic, g.nx(), g.ny(), g.width_x(),
                g.width_y());
  out << header;
  for (double v : field.values()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw IoError(path.string() + ": missing header");
  std::istringstream hs(header);
  std::string magic;
  std::size_t nx = 0, ny = 0;
  double wx = 0.0, wy = 0.0;
  if (!(hs >> magic >> nx >> ny >> wx >> wy) || magic != kMagic) {
    throw IoError(path.string() + ": not a SIFIELD1 file");
  }
  Grid grid = [&] {
    try {
      return Grid(nx, ny, wx, wy);
    } catch (const ParameterError& e) {
      throw IoError(path.string() + ": bad header: " + e.what());
    }
  }();
  std::vector<double> values(grid.cell_count());
  for (double& v : values) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw IoError(path.string() + ": truncated sample data");
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes, 8);
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes");
  try {
    return Field(grid, std::move(values));
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace sibucket
