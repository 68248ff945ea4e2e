#include "p2s/eval/chamfer.hpp"

#include <cmath>
#include <limits>

#include "p2s/errors.hpp"

namespace p2s::eval {

std::vector<sketch::Vec2> sketch_points(const sketch::StrokeSequence& seq) {
  std::vector<sketch::Vec2> pts{{0.0, 0.0}};
  double x = 0, y = 0;
  for (int i = 0; i < seq.n_s; ++i) {
    x += seq.points[i].dx;
    y += seq.points[i].dy;
    pts.push_back({x, y});
  }
  return pts;
}

namespace {

double directed(const std::vector<sketch::Vec2>& from, const std::vector<sketch::Vec2>& to) {
  double total = 0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const std::vector<sketch::Vec2>& a, const std::vector<sketch::Vec2>& b) {
  if (a.empty() || b.empty()) throw DataError("chamfer_distance: empty point set");
  return 0.5 * (directed(a, b) + directed(b, a));
}

double chamfer_distance(const sketch::StrokeSequence& a, const sketch::StrokeSequence& b) {
  return chamfer_distance(sketch_points(a), sketch_points(b));
}

}  // namespace p2s::eval
