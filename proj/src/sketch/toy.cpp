#include "p2s/sketch/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "p2s/errors.hpp"

namespace p2s::sketch {

namespace {

constexpr double kPi = std::numbers::pi;

// Outline strokes in the shape's local frame, where the shape spans [-1, 1]^2.
std::vector<Polyline> local_strokes(const ToyShape& s) {
  std::vector<Polyline> out;
  switch (s.category) {
    case 0: {
      Polyline ring;
      for (int k = 0; k <= 18; ++k) ring.push_back({std::cos(2 * kPi * k / 18), std::sin(2 * kPi * k / 18)});
      out.push_back(ring);
      if (s.detail) {
        Polyline inner;
        for (int k = 0; k <= 10; ++k)
          inner.push_back({0.35 * std::cos(2 * kPi * k / 10), -0.2 + 0.35 * std::sin(2 * kPi * k / 10)});
        out.push_back(inner);
      }
      break;
    }
    case 1:
      out.push_back({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {-1, -1}});
      if (s.detail) out.push_back({{-1, -1}, {1, 1}});
      break;
    case 2:
      out.push_back({{0, -1}, {1, 1}, {-1, 1}, {0, -1}});
      if (s.detail) out.push_back({{-0.5, 0}, {0.5, 0}});
      break;
    default: {
      const int teeth = s.detail ? 6 : 4;
      Polyline zig;
      for (int k = 0; k <= teeth; ++k) zig.push_back({-1.0 + 2.0 * k / teeth, k % 2 ? 1.0 : -1.0});
      out.push_back(zig);
      break;
    }
  }
  return out;
}

Vec2 to_pixels(const ToyShape& s, Vec2 p) {
  const double u = p.x * s.rx, v = p.y * s.ry;
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  return {s.cx + c * u - sn * v, s.cy + sn * u + c * v};
}

Vec2 to_local(const ToyShape& s, double x, double y) {
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  const double dx = x - s.cx, dy = y - s.cy;
  return {(c * dx + sn * dy) / s.rx, (-sn * dx + c * dy) / s.ry};
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double ex = b.x - a.x, ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  const double t = len2 > 0 ? std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(p.x - a.x - t * ex, p.y - a.y - t * ey);
}

double polyline_distance(Vec2 p, const Polyline& line) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) d = std::min(d, segment_distance(p, line[i - 1], line[i]));
  return d;
}

bool inside(const ToyShape& s, Vec2 l) {
  switch (s.category) {
    case 0:
      return l.x * l.x + l.y * l.y <= 1.0;
    case 1:
      return std::abs(l.x) <= 1.0 && std::abs(l.y) <= 1.0;
    case 2:
      // apex (0,-1), base y = 1
      return l.y <= 1.0 && std::abs(l.x) <= 0.5 * (l.y + 1.0);
    default:
      return false;
  }
}

}  // namespace

const std::vector<std::string>& toy_categories() {
  static const std::vector<std::string> names{"ellipse", "rectangle", "triangle", "zigzag"};
  return names;
}

ToyShape random_toy_shape(int category, int side, Rng& rng) {
  if (category < 0 || category >= static_cast<int>(toy_categories().size())) {
    throw DataError("unknown toy category " + std::to_string(category));
  }
  ToyShape s;
  s.category = category;
  s.rx = side * rng.uniform(0.18, 0.32);
  s.ry = side * rng.uniform(0.18, 0.32);
  s.angle = rng.uniform(-0.5, 0.5);
  const double reach = std::hypot(s.rx, s.ry);
  const double lo = std::min(reach + 1.0, 0.5 * side), hi = std::max(side - 1.0 - reach, 0.5 * side);
  s.cx = rng.uniform(lo, hi);
  s.cy = rng.uniform(lo, hi);
  s.detail = static_cast<int>(rng.below(2));
  return s;
}

StrokeSequence toy_sketch(const ToyShape& shape, Rng& rng) {
  std::vector<Polyline> strokes;
  for (const Polyline& local : local_strokes(shape)) {
    Polyline px;
    for (const Vec2& p : local) {
      Vec2 q = to_pixels(shape, p);
      q.x += 0.6 * rng.normal();
      q.y += 0.6 * rng.normal();
      px.push_back(q);
    }
    strokes.push_back(std::move(px));
  }
  return from_strokes(strokes);
}

RasterImage toy_photo(const ToyShape& shape, int side, Rng& rng) {
  RasterImage img = RasterImage::blank(side, side);
  const double bg = rng.uniform(0.8, 0.95);
  const double bg_slope = rng.uniform(-0.1, 0.1);
  const double fg = rng.uniform(0.15, 0.45);
  const double shade = rng.uniform(-0.15, 0.15);
  const std::vector<Polyline> local = local_strokes(shape);
  std::vector<Polyline> px;
  for (const Polyline& l : local) {
    Polyline p;
    for (const Vec2& v : l) p.push_back(to_pixels(shape, v));
    px.push_back(std::move(p));
  }
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Vec2 l = to_local(shape, c, r);
      double v = bg + bg_slope * (static_cast<double>(r) / side - 0.5);
      if (inside(shape, l)) v = fg + shade * l.x;
      const double edge = polyline_distance({double(c), double(r)}, px[0]);
      if (edge <= (shape.category == 3 ? 1.8 : 0.8)) v = 0.08;
      for (std::size_t k = 1; k < px.size(); ++k)
        if (polyline_distance({double(c), double(r)}, px[k]) <= 0.7) v = 0.95;
      v += 0.02 * rng.normal();
      img.at(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

std::vector<PhotoSketchPair> make_toy_pairs(std::size_t n, std::uint64_t seed, int side, const std::string& prefix) {
  std::vector<PhotoSketchPair> out;
  out.reserve(n);
  const int k = static_cast<int>(toy_categories().size());
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i, 0x70f);
    const int category = static_cast<int>(i % k);
    const ToyShape shape = random_toy_shape(category, side, rng);
    std::string num = std::to_string(i);
    num.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0');
    PhotoSketchPair p;
    p.id = prefix + num;
    p.sketch = toy_sketch(shape, rng);
    p.photo = toy_photo(shape, side, rng);
    p.label = category;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> make_toy_quickdraw(std::size_t n, std::uint64_t seed) {
  std::vector<std::string> lines;
  const int k = static_cast<int>(toy_categories().size());
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i, 0x9d);
    const int category = static_cast<int>(i % k);
    const ToyShape shape = random_toy_shape(category, 256, rng);
    nlohmann::json drawing = nlohmann::json::array();
    for (const Polyline& s : to_strokes(toy_sketch(shape, rng))) {
      nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
      for (const Vec2& p : s) {
        xs.push_back(std::lround(p.x));
        ys.push_back(std::lround(p.y));
      }
      drawing.push_back({xs, ys});
    }
    lines.push_back(nlohmann::json{{"key_id", std::to_string(1000000 + i)},
                                   {"word", toy_categories()[category]},
                                   {"drawing", drawing}}
                        .dump());
  }
  return lines;
}

}  // namespace p2s::sketch
