#pragma once

#include <filesystem>

#include "p2s/sketch/raster.hpp"

namespace p2s::sketch {

/// Loads binary (P5) or ASCII (P2) PGM, or 8/16-bit PNG of any color type.
/// Alpha is dropped; values are scaled to [0, 1]. Format is chosen by content.
RasterImage read_image(const std::filesystem::path& path);

/// 8-bit output; the format follows the extension (.png, anything else PGM).
/// Multi-channel images are written as PNG RGB/RGBA or averaged for PGM.
void write_image(const std::filesystem::path& path, const RasterImage& img);

}  // namespace p2s::sketch
