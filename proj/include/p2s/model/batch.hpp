#pragma once

#include <vector>

#include "p2s/core/tensor.hpp"
#include "p2s/sketch/raster.hpp"
#include "p2s/sketch/stroke.hpp"

namespace p2s::model {

/// Images stacked as [B, C, H, W]; all must share one size.
core::Tensor photos_tensor(const std::vector<const sketch::RasterImage*>& photos);

/// Points stacked as [T, B, 5] (time-major); all must have n_max == T.
core::Tensor sequence_tensor(const std::vector<const sketch::StrokeSequence*>& seqs);

/// Decoder inputs for teacher forcing: step 0 is the start token
/// (0, 0, 1, 0, 0), step i is target point i - 1. Shape [T, B, 5].
core::Tensor teacher_inputs(const std::vector<const sketch::StrokeSequence*>& seqs);

/// [H, W] plane of sample b, channel c back to an image (values clamped to [0, 1]).
sketch::RasterImage to_image(const core::Tensor& photos, int b);

}  // namespace p2s::model
