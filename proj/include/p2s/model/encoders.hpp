#pragma once

#include <vector>

#include "p2s/core/params.hpp"
#include "p2s/core/tensor.hpp"
#include "p2s/model/config.hpp"

namespace p2s::model {

/// Variational bottleneck output, each [B, N_z]. sigma_hat is a log-variance.
struct LatentCode {
  core::Tensor mu;
  core::Tensor sigma_hat;
  core::Tensor z;
};

/// z = mu + exp(sigma_hat / 2) * eps; eps is treated as a constant.
core::Tensor reparameterize(const core::Tensor& mu, const core::Tensor& sigma_hat, const core::Tensor& eps);

/// Photo encoder on photos [B, C, S, S]: five stride-2 convs (instance norm
/// on all but the first, ReLU on all), then two FC layers to (mu, sigma_hat).
LatentCode encode_photo(const core::ParameterSet& p, const ModelConfig& cfg, const core::Tensor& photos,
                        const core::Tensor& eps);

/// Sketch encoder on points [n_max, B, 5]: bidirectional LSTM, final states
/// concatenated, one FC layer to (mu, sigma_hat).
LatentCode encode_sketch(const core::ParameterSet& p, const ModelConfig& cfg, const core::Tensor& seq,
                         const core::Tensor& eps);

/// Same bottleneck with a second noise draw; no encoder recomputation.
LatentCode resample(const LatentCode& code, const core::Tensor& eps);

enum class KlForm {
  Standard,  // -1/2 (1 + s - mu^2 - e^s), the KL to N(0, I)
  Printed,   // -1/2 (1 + s^2 - e^s), kept for comparison only
};

/// Mean over codes, batch rows and latent dimensions. Throws on an empty list.
core::Tensor kl_loss(const std::vector<LatentCode>& codes, KlForm form = KlForm::Standard);

}  // namespace p2s::model
