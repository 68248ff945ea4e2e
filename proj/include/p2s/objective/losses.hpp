#pragma once

#include <vector>

#include "p2s/core/params.hpp"
#include "p2s/model/config.hpp"
#include "p2s/model/encoders.hpp"
#include "p2s/rng.hpp"
#include "p2s/sketch/dataset.hpp"

namespace p2s::objective {

struct LossWeights {
  double lambda_shortcut = 1.0;
  double lambda_kl = 0.01;
  model::KlForm kl_form = model::KlForm::Standard;

  bool operator==(const LossWeights&) const = default;
};

/// Tensors for one batch of pairs.
struct Batch {
  core::Tensor photos;   // [B, C, S, S]
  core::Tensor points;   // [T, B, 5] encoder input
  core::Tensor teacher;  // [T, B, 5] decoder input
  std::vector<const sketch::StrokeSequence*> targets;

  int size() const { return static_cast<int>(targets.size()); }
  static Batch from(const std::vector<const sketch::PhotoSketchPair*>& pairs);
};

/// Reparameterization noise for the four bottleneck codes of a batch, in
/// draw order: photo->sketch, sketch->photo, photo->photo, sketch->sketch.
struct Noise {
  core::Tensor photo_to_sketch, sketch_to_photo, photo_to_photo, sketch_to_sketch;

  static Noise draw(Rng& rng, int batch, int latent);
  static Noise zeros(int batch, int latent);
};

/// A loss and its two parts (sketch reconstruction NLL, photo L2).
struct TwoPartLoss {
  core::Tensor total;
  core::Tensor sketch_term;
  core::Tensor photo_term;
};

/// rnn_loss(Y, D_s(E_p(X))) + photo_l2(X, D_p(E_s(Y))).
TwoPartLoss supervised_loss(const core::ParameterSet& p, const model::ModelConfig& cfg, const Batch& batch,
                            const Noise& noise);

/// rnn_loss(Y, D_s(E_s(Y))) + photo_l2(X, D_p(E_p(X))).
TwoPartLoss shortcut_loss(const core::ParameterSet& p, const model::ModelConfig& cfg, const Batch& batch,
                          const Noise& noise);

struct FullLoss {
  core::Tensor total;
  TwoPartLoss supervised;
  TwoPartLoss shortcut;  // undefined tensors when lambda_shortcut == 0
  core::Tensor kl;
};

/// supervised + lambda_shortcut * shortcut + lambda_kl * KL over the four
/// codes. Each encoder runs once; the four codes are two noise draws from
/// each. Terms with a zero weight are left out of the total.
FullLoss full_loss(const core::ParameterSet& p, const model::ModelConfig& cfg, const Batch& batch, const Noise& noise,
                   const LossWeights& w);

/// The same combination on plain numbers.
double combine(double supervised, double shortcut, double kl, const LossWeights& w);

}  // namespace p2s::objective
