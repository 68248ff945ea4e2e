#pragma once

#include "p2s/sketch/stroke.hpp"

namespace p2s::sketch {

/// Ramer-Douglas-Peucker on one polyline. A point is kept when its distance
/// to the chord is strictly greater than epsilon; among equally distant
/// candidates the earliest wins. Distance to a degenerate chord is the
/// distance to its start point.
Polyline rdp(const Polyline& line, double epsilon);

/// Simplifies every stroke independently in absolute coordinates. Stroke
/// endpoints survive, so pen states at stroke boundaries are unchanged.
/// epsilon <= 0 returns the input.
StrokeSequence rdp_simplify(const StrokeSequence& seq, double epsilon);

/// Removes strokes whose arc length is below `min_length`; the pen travel of
/// removed strokes folds into the next kept stroke's first offset.
StrokeSequence drop_short_strokes(const StrokeSequence& seq, double min_length);

double arc_length(const Polyline& line);

}  // namespace p2s::sketch
