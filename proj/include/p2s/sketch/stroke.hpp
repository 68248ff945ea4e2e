#pragma once

// Stroke-5 sketches. Each point stores the offset from the previous point and
// a one-hot pen state describing what happens *after* the point:
//   p1  pen stays down, a segment is drawn to the next point
//   p2  pen is lifted, the next point starts a new stroke
//   p3  end of sketch; this and every later point is padding
//
// A StrokeSequence always holds exactly n_max points. The first n_s are real
// points; the rest are (0, 0, 0, 0, 1).

#include <string>
#include <utility>
#include <vector>

namespace p2s::sketch {

struct Point5 {
  double dx = 0.0;
  double dy = 0.0;
  int p1 = 0;
  int p2 = 0;
  int p3 = 0;

  static Point5 end_token() { return {0.0, 0.0, 0, 0, 1}; }
  static Point5 start_token() { return {0.0, 0.0, 1, 0, 0}; }

  /// Index of the set pen bit (0, 1 or 2); -1 if the state is not one-hot.
  int pen() const;

  bool operator==(const Point5&) const = default;
};

struct StrokeSequence {
  std::vector<Point5> points;
  int n_s = 0;

  int n_max() const { return static_cast<int>(points.size()); }
  std::vector<Point5> real_points() const { return {points.begin(), points.begin() + n_s}; }

  /// Real points followed by a single end token.
  static StrokeSequence from_real(std::vector<Point5> real);

  bool operator==(const StrokeSequence&) const = default;
};

/// Empty string if `seq` satisfies the sequence invariants, else the reason.
std::string check_sequence(const StrokeSequence& seq);

/// Throws DataError with the reason when `check_sequence` fails.
void require_valid(const StrokeSequence& seq);

/// Pads with end tokens (or trims padding) to exactly n_max points.
/// Throws DataError("sequence too long") when n_s > n_max.
StrokeSequence pad_to_max(const StrokeSequence& seq, int n_max);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

using Polyline = std::vector<Vec2>;

/// Absolute coordinates of the real points, grouped into strokes. The pen
/// starts at the origin; a stroke ends at a point with p2 or at the last real
/// point.
std::vector<Polyline> to_strokes(const StrokeSequence& seq);

/// Inverse of to_strokes: pen-lift on the last point of each stroke, followed
/// by one end token. Empty strokes are skipped.
StrokeSequence from_strokes(const std::vector<Polyline>& strokes);

/// Multiplies every offset by `factor`.
StrokeSequence scale_offsets(const StrokeSequence& seq, double factor);

/// Number of pen-down segments (real points with p1 followed by another point).
int segment_count(const StrokeSequence& seq);

}  // namespace p2s::sketch
