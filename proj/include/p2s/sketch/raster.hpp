#pragma once

#include <functional>
#include <vector>

#include "p2s/sketch/stroke.hpp"

namespace p2s::sketch {

/// Row-major H x W x C image with values in [0, 1].
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  static RasterImage blank(int height, int width, int channels = 1);

  bool empty() const { return data.empty(); }
  double& at(int row, int col, int ch = 0) { return data[(static_cast<std::size_t>(row) * width + col) * channels + ch]; }
  double at(int row, int col, int ch = 0) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }

  bool operator==(const RasterImage&) const = default;
};

/// Throws DataError if the size or value range is off.
void require_valid(const RasterImage& img);

/// Integer line from (x0, y0) to (x1, y1), endpoints included, calling
/// plot(x, y) once per pixel.
void bresenham(int x0, int y0, int x1, int y1, const std::function<void(int, int)>& plot);

/// Pen-down segments drawn with value 1 on a 0 background, square side x side,
/// single channel. The sketch's bounding box is centered and scaled uniformly
/// to leave a 10% margin on each side; x maps to columns and y to rows.
/// `line_width` > 1 stamps a line_width x line_width square at every pixel.
RasterImage rasterize(const StrokeSequence& seq, int side, int line_width = 1);

/// Mean over channels; single-channel images are returned unchanged.
RasterImage to_grayscale(const RasterImage& img);

/// Bilinear resize of each channel.
RasterImage resize(const RasterImage& img, int height, int width);

}  // namespace p2s::sketch
