#include "p2s/model/decoders.hpp"

#include "p2s/core/losses.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"

namespace p2s::model {

using namespace core;

namespace {

void require_latent(const ModelConfig& cfg, const Tensor& z, const char* who) {
  if (z.rank() != 2 || z.dim(1) != cfg.latent) {
    throw ShapeError(std::string(who) + ": latent " + shape_str(z.shape()) + ", expected [B," +
                     std::to_string(cfg.latent) + "]");
  }
}

}  // namespace

Tensor decode_photo(const ParameterSet& p, const ModelConfig& cfg, const Tensor& z) {
  require_latent(cfg, z, "decode_photo");
  const std::vector<int> trail = cfg.spatial_trail();
  const int layers = static_cast<int>(cfg.conv_channels.size());
  const int batch = z.dim(0);
  Tensor x = relu(linear(z, p.at("dp/fc/w"), p.at("dp/fc/b")));
  x = reshape(x, {batch, cfg.conv_channels.back(), trail.back(), trail.back()});
  for (int j = 0; j < layers; ++j) {
    const std::string name = "dp/deconv" + std::to_string(j);
    if (j + 1 < layers) {
      const std::string norm = "dp/norm" + std::to_string(j);
      x = relu(instance_norm(conv2d_transpose(x, p.at(name + "/w"), Tensor(), 2, 1), p.at(norm + "/gamma"),
                             p.at(norm + "/beta")));
    } else {
      x = sigmoid(conv2d_transpose(x, p.at(name + "/w"), p.at(name + "/b"), 2, 1));
    }
  }
  return x;
}

Tensor photo_l2_loss(const Tensor& pred, const Tensor& target) { return mse(pred, target); }

SketchDecoderState decoder_start(const ParameterSet& p, const ModelConfig& cfg, const Tensor& z) {
  require_latent(cfg, z, "decode_sketch");
  const int h = cfg.decoder_hidden;
  const Tensor init = tanh(linear(z, p.at("ds/init/w"), p.at("ds/init/b")));
  return {{slice_cols(init, 0, h), slice_cols(init, h, h)}, linear(z, p.at("ds/wz"), p.at("ds/lstm/b"))};
}

Tensor decoder_step(const ParameterSet& p, SketchDecoderState& state, const Tensor& prev) {
  const Tensor gates = add(matmul(prev, p.at("ds/lstm/wx")), state.z_gates);
  state.lstm = lstm_recurrence(gates, state.lstm, p.at("ds/lstm/wh"));
  return linear(state.lstm.h, p.at("ds/out/w"), p.at("ds/out/b"));
}

Tensor decode_sketch_teacher_forced(const ParameterSet& p, const ModelConfig& cfg, const Tensor& z,
                                    const Tensor& inputs) {
  if (inputs.rank() != 3 || inputs.dim(0) != cfg.n_max || inputs.dim(2) != 5 || inputs.dim(1) != z.dim(0)) {
    throw ShapeError("decode_sketch: inputs " + shape_str(inputs.shape()) + " are not padded to [" +
                     std::to_string(cfg.n_max) + "," + std::to_string(z.dim(0)) + ",5]");
  }
  SketchDecoderState st = decoder_start(p, cfg, z);
  const int steps = inputs.dim(0), batch = inputs.dim(1), gw = 4 * cfg.decoder_hidden;
  // point projections for every step in one product, then the latent term broadcast over time
  Tensor gates = matmul(reshape(inputs, {steps * batch, 5}), p.at("ds/lstm/wx"));
  gates = add(reshape(gates, {steps, batch, gw}), st.z_gates);
  std::vector<Tensor> hs;
  hs.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    st.lstm = lstm_recurrence(reshape(slice_rows(gates, t, 1), {batch, gw}), st.lstm, p.at("ds/lstm/wh"));
    hs.push_back(st.lstm.h);
  }
  return linear(concat_rows(hs), p.at("ds/out/w"), p.at("ds/out/b"));
}

std::vector<GmmParams> head_params(const Tensor& head, int batch, int b, int mixtures) {
  const int width = 6 * mixtures + 3;
  if (head.rank() != 2 || head.dim(1) != width || head.dim(0) % batch != 0) {
    throw ShapeError("head_params: head " + shape_str(head.shape()) + " does not fit batch " + std::to_string(batch));
  }
  std::vector<GmmParams> out;
  for (int t = 0; t < head.dim(0) / batch; ++t) {
    out.push_back(gmm_from_row(head.data().subspan((static_cast<std::size_t>(t) * batch + b) * width, width), mixtures));
  }
  return out;
}

}  // namespace p2s::model
