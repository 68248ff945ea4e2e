#include "p2s/sketch/stroke.hpp"

#include <cmath>

#include "p2s/errors.hpp"

namespace p2s::sketch {

int Point5::pen() const {
  auto bit = [](int v) { return v == 0 || v == 1; };
  if (!bit(p1) || !bit(p2) || !bit(p3) || p1 + p2 + p3 != 1) return -1;
  return p1 ? 0 : (p2 ? 1 : 2);
}

StrokeSequence StrokeSequence::from_real(std::vector<Point5> real) {
  StrokeSequence seq;
  seq.n_s = static_cast<int>(real.size());
  seq.points = std::move(real);
  seq.points.push_back(Point5::end_token());
  return seq;
}

std::string check_sequence(const StrokeSequence& seq) {
  const int n = seq.n_max();
  if (seq.n_s < 0 || seq.n_s > n) {
    return "n_s " + std::to_string(seq.n_s) + " outside [0, " + std::to_string(n) + "]";
  }
  bool ended = false;
  for (int i = 0; i < n; ++i) {
    const Point5& p = seq.points[i];
    if (p.pen() < 0) return "point " + std::to_string(i) + " has a pen state that is not one-hot";
    if (!std::isfinite(p.dx) || !std::isfinite(p.dy)) return "point " + std::to_string(i) + " has a non-finite offset";
    if (i < seq.n_s - 1 && p.p3) return "end of sketch at " + std::to_string(i) + " before n_s - 1";
    if (ended && !p.p3) return "point " + std::to_string(i) + " follows the end of sketch";
    if (i >= seq.n_s && (!p.p3 || p.dx != 0.0 || p.dy != 0.0)) {
      return "padding point " + std::to_string(i) + " is not (0,0,0,0,1)";
    }
    ended = ended || p.p3;
  }
  return {};
}

void require_valid(const StrokeSequence& seq) {
  if (auto why = check_sequence(seq); !why.empty()) throw DataError("invalid stroke sequence: " + why);
}

StrokeSequence pad_to_max(const StrokeSequence& seq, int n_max) {
  if (seq.n_s > n_max) {
    throw DataError("sequence too long: " + std::to_string(seq.n_s) + " points, n_max " + std::to_string(n_max));
  }
  StrokeSequence out;
  out.n_s = seq.n_s;
  out.points.assign(seq.points.begin(), seq.points.begin() + seq.n_s);
  out.points.resize(n_max, Point5::end_token());
  return out;
}

std::vector<Polyline> to_strokes(const StrokeSequence& seq) {
  std::vector<Polyline> strokes;
  double x = 0.0, y = 0.0;
  bool open = false;
  for (int i = 0; i < seq.n_s; ++i) {
    const Point5& p = seq.points[i];
    x += p.dx;
    y += p.dy;
    if (!open) strokes.emplace_back();
    strokes.back().push_back({x, y});
    open = p.p1 == 1;
  }
  return strokes;
}

StrokeSequence from_strokes(const std::vector<Polyline>& strokes) {
  std::vector<Point5> pts;
  double x = 0.0, y = 0.0;
  for (const Polyline& s : strokes) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool last = i + 1 == s.size();
      pts.push_back({s[i].x - x, s[i].y - y, last ? 0 : 1, last ? 1 : 0, 0});
      x = s[i].x;
      y = s[i].y;
    }
  }
  return StrokeSequence::from_real(std::move(pts));
}

StrokeSequence scale_offsets(const StrokeSequence& seq, double factor) {
  StrokeSequence out = seq;
  for (int i = 0; i < out.n_s; ++i) {
    out.points[i].dx *= factor;
    out.points[i].dy *= factor;
  }
  return out;
}

int segment_count(const StrokeSequence& seq) {
  int n = 0;
  for (int i = 0; i + 1 < seq.n_s; ++i) n += seq.points[i].p1;
  return n;
}

}  // namespace p2s::sketch
