#include "p2s/model/config.hpp"

#include <cmath>

#include "p2s/core/layers.hpp"
#include "p2s/errors.hpp"

namespace p2s::model {

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.image_size = 224;
  c.image_channels = 3;
  c.conv_channels = {64, 128, 256, 512, 512};
  c.photo_fc = 512;
  c.latent = 128;
  c.encoder_hidden = 256;
  c.decoder_hidden = 512;
  c.n_max = 250;
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  // 48 keeps every feature map at least 2x2; instance norm of a single
  // pixel is constant and would park the following ReLU on its kink
  c.image_size = 48;
  c.conv_channels = {2, 3, 3, 4, 4};
  c.photo_fc = 6;
  c.latent = 3;
  c.encoder_hidden = 3;
  c.decoder_hidden = 4;
  c.mixtures = 2;
  c.n_max = 4;
  return c;
}

std::vector<int> ModelConfig::spatial_trail() const {
  std::vector<int> trail{image_size};
  for (std::size_t i = 0; i < conv_channels.size(); ++i) trail.push_back(core::conv_out_size(trail.back(), 3, 2, 1));
  return trail;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ShapeError(std::string("model config: ") + name + " must be positive");
  };
  positive(image_size, "image_size");
  positive(image_channels, "image_channels");
  positive(photo_fc, "photo_fc");
  positive(latent, "latent");
  positive(encoder_hidden, "encoder_hidden");
  positive(decoder_hidden, "decoder_hidden");
  positive(mixtures, "mixtures");
  positive(n_max, "n_max");
  if (conv_channels.empty()) throw ShapeError("model config: need at least one conv layer");
  for (int c : conv_channels) positive(c, "conv channel");
  const std::vector<int> trail = spatial_trail();
  for (std::size_t i = 1; i < trail.size(); ++i) {
    // the decoder mirrors each step with k = out - 2*in + 4, which must be a usable kernel
    const int k = trail[i - 1] - 2 * trail[i] + 4;
    if (k < 2) throw ShapeError("model config: image size " + std::to_string(image_size) + " has no mirrored decoder");
  }
}

namespace {

const char* const kKeys[] = {"image_size", "image_channels", "photo_fc", "latent", "encoder_hidden",
                             "decoder_hidden", "mixtures", "n_max"};

int* field(ModelConfig& c, int i) {
  int* fields[] = {&c.image_size, &c.image_channels, &c.photo_fc, &c.latent, &c.encoder_hidden,
                   &c.decoder_hidden, &c.mixtures, &c.n_max};
  return fields[i];
}

}  // namespace

void ModelConfig::write_to(core::ParameterSet& set) const {
  ModelConfig copy = *this;
  for (int i = 0; i < 8; ++i) set.add(std::string("config/") + kKeys[i], core::Tensor::scalar(*field(copy, i)));
  std::vector<double> ch(conv_channels.begin(), conv_channels.end());
  set.add("config/conv_channels", core::Tensor::from({static_cast<int>(ch.size())}, ch));
}

ModelConfig ModelConfig::read_from(const core::ParameterSet& set) {
  ModelConfig c;
  for (int i = 0; i < 8; ++i) {
    const std::string key = std::string("config/") + kKeys[i];
    if (!set.contains(key)) throw DataError("checkpoint is missing " + key);
    *field(c, i) = static_cast<int>(std::lround(set.at(key).item()));
  }
  if (!set.contains("config/conv_channels")) throw DataError("checkpoint is missing config/conv_channels");
  c.conv_channels.clear();
  for (double v : set.at("config/conv_channels").data()) c.conv_channels.push_back(static_cast<int>(std::lround(v)));
  c.validate();
  return c;
}

}  // namespace p2s::model
