#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2s/core/params.hpp"

namespace p2s::model {

/// Architecture sizes for the four subnets.
struct ModelConfig {
  int image_size = 48;
  int image_channels = 1;
  std::vector<int> conv_channels{16, 32, 64, 96, 128};  // photo encoder, stride 2 each
  int photo_fc = 256;                                    // hidden width between the two encoder FCs
  int latent = 64;
  int encoder_hidden = 128;  // per direction
  int decoder_hidden = 128;
  int mixtures = 20;
  int n_max = 96;

  /// Desk-scale defaults.
  static ModelConfig desk() { return {}; }
  /// The published full-scale input size and widths, for reference runs.
  static ModelConfig full_scale();
  /// Small sizes for gradient checks and fast tests.
  static ModelConfig tiny();

  /// Encoder spatial sizes from the input down, length conv_channels + 1.
  std::vector<int> spatial_trail() const;
  int head_width() const { return 6 * mixtures + 3; }

  /// Throws ShapeError when the sizes cannot form the network.
  void validate() const;

  /// Stored as scalar tensors under "config/..." inside checkpoints.
  void write_to(core::ParameterSet& set) const;
  static ModelConfig read_from(const core::ParameterSet& set);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace p2s::model
