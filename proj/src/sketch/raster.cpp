#include "p2s/sketch/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "p2s/errors.hpp"

namespace p2s::sketch {

RasterImage RasterImage::blank(int height, int width, int channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw DataError("image size " + std::to_string(height) + "x" + std::to_string(width) + "x" +
                    std::to_string(channels) + " is not positive");
  }
  return {height, width, channels, std::vector<double>(static_cast<std::size_t>(height) * width * channels, 0.0)};
}

void require_valid(const RasterImage& img) {
  if (img.height <= 0 || img.width <= 0 || img.channels <= 0) throw DataError("image has a non-positive size");
  if (img.data.size() != static_cast<std::size_t>(img.height) * img.width * img.channels) {
    throw DataError("image data length does not match its size");
  }
  for (double v : img.data)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("image value outside [0, 1]");
}

void bresenham(int x0, int y0, int x1, int y1, const std::function<void(int, int)>& plot) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    plot(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

RasterImage rasterize(const StrokeSequence& seq, int side, int line_width) {
  if (side <= 0) throw DataError("rasterize: side must be positive");
  if (line_width <= 0) throw DataError("rasterize: line width must be positive");
  RasterImage img = RasterImage::blank(side, side);

  const std::vector<Polyline> strokes = to_strokes(seq);
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  bool any = false;
  for (const Polyline& s : strokes) {
    if (s.size() < 2) continue;
    any = true;
    for (const Vec2& p : s) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
  }
  if (!any) return img;

  const double extent = std::max(hi_x - lo_x, hi_y - lo_y);
  const double span = 0.8 * (side - 1);
  const double scale = extent > 0.0 ? span / extent : 0.0;
  const double mid = 0.5 * (side - 1);
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  auto px = [&](double v, double c) { return static_cast<int>(std::floor(mid + (v - c) * scale + 0.5)); };

  const int back = (line_width - 1) / 2;
  auto plot = [&](int x, int y) {
    for (int r = y - back; r < y - back + line_width; ++r)
      for (int c = x - back; c < x - back + line_width; ++c)
        if (r >= 0 && c >= 0 && r < side && c < side) img.at(r, c) = 1.0;
  };
  for (const Polyline& s : strokes) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      bresenham(px(s[i - 1].x, cx), px(s[i - 1].y, cy), px(s[i].x, cx), px(s[i].y, cy), plot);
    }
  }
  return img;
}

RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels == 1) return img;
  RasterImage out = RasterImage::blank(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double s = 0.0;
      for (int ch = 0; ch < img.channels; ++ch) s += img.at(r, c, ch);
      out.at(r, c) = s / img.channels;
    }
  return out;
}

RasterImage resize(const RasterImage& img, int height, int width) {
  RasterImage out = RasterImage::blank(height, width, img.channels);
  if (height == img.height && width == img.width) return img;
  const double sy = static_cast<double>(img.height) / height, sx = static_cast<double>(img.width) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < img.channels; ++ch) {
        const double top = img.at(y0, x0, ch) * (1 - wx) + img.at(y0, x1, ch) * wx;
        const double bot = img.at(y1, x0, ch) * (1 - wx) + img.at(y1, x1, ch) * wx;
        out.at(r, c, ch) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace p2s::sketch
