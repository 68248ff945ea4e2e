#pragma once

#include <vector>

#include "p2s/sketch/stroke.hpp"

namespace p2s::eval {

/// Absolute positions visited by a sketch: the origin, then the running sum
/// of offsets after each real point.
std::vector<sketch::Vec2> sketch_points(const sketch::StrokeSequence& seq);

/// Symmetric mean nearest-neighbour distance:
///   (mean_{a in A} min_b |a - b| + mean_{b in B} min_a |a - b|) / 2.
double chamfer_distance(const std::vector<sketch::Vec2>& a, const std::vector<sketch::Vec2>& b);
double chamfer_distance(const sketch::StrokeSequence& a, const sketch::StrokeSequence& b);

}  // namespace p2s::eval
