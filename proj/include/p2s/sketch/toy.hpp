#pragma once

// Procedural stand-ins for photo-sketch data: simple shape categories drawn
// as shaded "photos" and traced as hand-jittered outline sketches. Sketch
// coordinates are pixels in the photo frame (x to the right, y down).

#include <cstdint>
#include <string>
#include <vector>

#include "p2s/rng.hpp"
#include "p2s/sketch/dataset.hpp"

namespace p2s::sketch {

const std::vector<std::string>& toy_categories();

/// Geometry shared by a photo and its sketch.
struct ToyShape {
  int category = 0;
  double cx = 0.0, cy = 0.0;  // center in pixels
  double rx = 0.0, ry = 0.0;  // half extents
  double angle = 0.0;         // radians
  int detail = 0;             // category-specific variant
};

ToyShape random_toy_shape(int category, int side, Rng& rng);

/// Outline strokes for `shape`, jittered by `rng`, one end token appended.
StrokeSequence toy_sketch(const ToyShape& shape, Rng& rng);

/// Shaded single-channel rendering of `shape` on a textured background.
RasterImage toy_photo(const ToyShape& shape, int side, Rng& rng);

/// `n` labeled pairs, categories cycling, ids "<prefix><index>".
std::vector<PhotoSketchPair> make_toy_pairs(std::size_t n, std::uint64_t seed, int side,
                                            const std::string& prefix = "toy");

/// QuickDraw-style ndjson lines (integer coordinates, 256 px canvas).
std::vector<std::string> make_toy_quickdraw(std::size_t n, std::uint64_t seed);

}  // namespace p2s::sketch
