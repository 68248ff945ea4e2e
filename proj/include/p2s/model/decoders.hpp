#pragma once

#include <vector>

#include "p2s/core/layers.hpp"
#include "p2s/core/params.hpp"
#include "p2s/model/config.hpp"
#include "p2s/model/gmm.hpp"

namespace p2s::model {

/// Photo decoder: FC, reshape to the encoder's last feature map, then one
/// stride-2 transposed conv per encoder conv (instance norm + ReLU on all but
/// the last, sigmoid on the last). Returns [B, C, S, S].
core::Tensor decode_photo(const core::ParameterSet& p, const ModelConfig& cfg, const core::Tensor& z);

/// Mean squared error over all pixels.
core::Tensor photo_l2_loss(const core::Tensor& pred, const core::Tensor& target);

/// Recurrent state of the sketch decoder plus the latent's contribution to
/// the gates, which is the same at every step.
struct SketchDecoderState {
  core::LstmState lstm;
  core::Tensor z_gates;  // [B, 4H], includes the bias
};

/// (h, c) = tanh(FC(z)).
SketchDecoderState decoder_start(const core::ParameterSet& p, const ModelConfig& cfg, const core::Tensor& z);

/// One step from the previous point [B, 5]; returns the head [B, 6M + 3].
core::Tensor decoder_step(const core::ParameterSet& p, SketchDecoderState& state, const core::Tensor& prev);

/// All steps at once from teacher inputs [T, B, 5] (see teacher_inputs).
/// Returns the head [T * B, 6M + 3], row t * B + b.
core::Tensor decode_sketch_teacher_forced(const core::ParameterSet& p, const ModelConfig& cfg, const core::Tensor& z,
                                          const core::Tensor& inputs);

/// Mixture parameters of sample b at every step of a head from the above.
std::vector<GmmParams> head_params(const core::Tensor& head, int batch, int b, int mixtures);

}  // namespace p2s::model
