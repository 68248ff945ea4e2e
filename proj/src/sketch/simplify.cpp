#include "p2s/sketch/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace p2s::sketch {

namespace {

double chord_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double ex = b.x - a.x, ey = b.y - a.y;
  const double len = std::hypot(ex, ey);
  if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs(ex * (p.y - a.y) - ey * (p.x - a.x)) / len;
}

// Padding length of the result follows the input when it fits.
StrokeSequence keep_length(const StrokeSequence& out, const StrokeSequence& in) {
  return pad_to_max(out, std::max(in.n_max(), out.n_max()));
}

}  // namespace

Polyline rdp(const Polyline& line, double epsilon) {
  const std::size_t n = line.size();
  if (n < 3 || epsilon <= 0.0) return line;
  std::vector<char> keep(n, 0);
  keep[0] = keep[n - 1] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    double best = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = chord_distance(line[i], line[lo], line[hi]);
      if (d > best) {
        best = d;
        at = i;
      }
    }
    if (at != lo && best > epsilon) {
      keep[at] = 1;
      stack.push_back({lo, at});
      stack.push_back({at, hi});
    }
  }
  Polyline out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(line[i]);
  return out;
}

StrokeSequence rdp_simplify(const StrokeSequence& seq, double epsilon) {
  if (epsilon <= 0.0) return seq;
  std::vector<Polyline> strokes = to_strokes(seq);
  for (Polyline& s : strokes) s = rdp(s, epsilon);
  return keep_length(from_strokes(strokes), seq);
}

double arc_length(const Polyline& line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
  return len;
}

StrokeSequence drop_short_strokes(const StrokeSequence& seq, double min_length) {
  std::vector<Polyline> kept;
  for (Polyline& s : to_strokes(seq))
    if (arc_length(s) >= min_length) kept.push_back(std::move(s));
  return keep_length(from_strokes(kept), seq);
}

}  // namespace p2s::sketch
