#pragma once

#include <vector>

#include "p2s/core/params.hpp"
#include "p2s/model/config.hpp"
#include "p2s/model/gmm.hpp"
#include "p2s/rng.hpp"
#include "p2s/sketch/raster.hpp"
#include "p2s/sketch/stroke.hpp"

namespace p2s::synth {

constexpr double kDefaultTemperature = 0.4;

/// One point from a mixture head. For temperature t in (0, 1] the mixture
/// weights become softmax(log pi / t), both sigmas are scaled by sqrt(t) and
/// the pen state is drawn from softmax(q / t). At t = 0 the most likely
/// component's mean and the most likely pen state are returned. Throws
/// DataError for invalid parameters or a temperature outside [0, 1].
sketch::Point5 sample_gmm(const model::GmmParams& g, double temperature, Rng& rng);

/// Grayscale or channel-replicated and resized to the model's input.
sketch::RasterImage fit_photo(const sketch::RasterImage& photo, const model::ModelConfig& cfg);

/// Autoregressive decoding from a latent [1, N_z]. Each sampled point is fed
/// back in; decoding stops at the first sampled end state or when n_max - 1
/// real points exist. The result is padded to n_max.
sketch::StrokeSequence decode_latent(const core::ParameterSet& p, const model::ModelConfig& cfg, const core::Tensor& z,
                                     double temperature, Rng& rng);

/// Sketch of `photo`. The latent is the encoder mean unless resample_latent
/// is set, in which case a fresh noise draw from `rng` is used.
sketch::StrokeSequence sample_sketch(const sketch::RasterImage& photo, const core::ParameterSet& p,
                                     const model::ModelConfig& cfg, double temperature, Rng& rng,
                                     bool resample_latent = false);

/// Reconstruction of a sketch through the sketch encoder (mean latent).
sketch::StrokeSequence reconstruct_sketch(const sketch::StrokeSequence& seq, const core::ParameterSet& p,
                                          const model::ModelConfig& cfg, double temperature, Rng& rng);

/// k sketches of one photo, each with its own latent draw. Throws DataError for k < 1.
std::vector<sketch::StrokeSequence> sample_variations(const sketch::RasterImage& photo, const core::ParameterSet& p,
                                                      const model::ModelConfig& cfg, int k, double temperature,
                                                      Rng& rng);

}  // namespace p2s::synth
