#pragma once

#include <filesystem>

#include "sibucket/grid.hpp"

namespace sibucket {

/// SIFIELD1 raw field files.
///
/// Layout: one ASCII header line
///   `SIFIELD1 <nx> <ny> <width_x> <width_y>\n`
/// (widths printed with "%.17g"), followed by nx*ny little-endian IEEE-754
/// binary64 samples in row-major (x outer, y inner) order.
void write_field(const std::filesystem::path& path, const Field& field);
Field read_field(const std::filesystem::path& path);

}  // namespace sibucket
