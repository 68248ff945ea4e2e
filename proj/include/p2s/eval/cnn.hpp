#pragma once

#include <string>
#include <vector>

#include "p2s/core/params.hpp"
#include "p2s/rng.hpp"
#include "p2s/sketch/raster.hpp"

namespace p2s::eval {

/// Stride-2 3x3 conv stack with ReLUs followed by one FC layer, used by the
/// recognizer and the retrieval embedder. Parameters live under `prefix`.
struct SmallCnn {
  std::string prefix;
  int image_size = 48;
  std::vector<int> channels{8, 16, 32};
  int out_dim = 0;

  void init(core::ParameterSet& p, Rng& rng) const;
  /// images [B, 1, S, S] -> [B, out_dim]
  core::Tensor forward(const core::ParameterSet& p, const core::Tensor& images) const;
};

/// Single-channel images at `side`, stacked into [B, 1, side, side].
core::Tensor gray_batch(const std::vector<const sketch::RasterImage*>& images, int side);

}  // namespace p2s::eval
