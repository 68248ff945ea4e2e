#include "p2s/model/encoders.hpp"

#include "p2s/core/layers.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"

namespace p2s::model {

using namespace core;

Tensor reparameterize(const Tensor& mu, const Tensor& sigma_hat, const Tensor& eps) {
  if (mu.shape() != sigma_hat.shape() || mu.shape() != eps.shape()) {
    throw ShapeError("reparameterize: mu " + shape_str(mu.shape()) + ", sigma_hat " + shape_str(sigma_hat.shape()) +
                     ", eps " + shape_str(eps.shape()) + " differ");
  }
  return add(mu, mul(exp(scale(sigma_hat, 0.5)), eps));
}

namespace {

LatentCode split_code(const Tensor& out, int nz, const Tensor& eps) {
  LatentCode c;
  c.mu = slice_cols(out, 0, nz);
  c.sigma_hat = slice_cols(out, nz, nz);
  c.z = reparameterize(c.mu, c.sigma_hat, eps);
  return c;
}

LstmWeights lstm_weights(const ParameterSet& p, const std::string& name) {
  return {p.at(name + "/wx"), p.at(name + "/wh"), p.at(name + "/b")};
}

}  // namespace

LatentCode encode_photo(const ParameterSet& p, const ModelConfig& cfg, const Tensor& photos, const Tensor& eps) {
  if (photos.rank() != 4 || photos.dim(1) != cfg.image_channels || photos.dim(2) != cfg.image_size ||
      photos.dim(3) != cfg.image_size) {
    throw ShapeError("encode_photo: expected [B," + std::to_string(cfg.image_channels) + "," +
                     std::to_string(cfg.image_size) + "," + std::to_string(cfg.image_size) + "], got " +
                     shape_str(photos.shape()));
  }
  Tensor x = photos;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    const std::string name = "ep/conv" + std::to_string(i);
    if (i == 0) {
      x = relu(conv2d(x, p.at(name + "/w"), p.at(name + "/b"), 2, 1));
    } else {
      const std::string norm = "ep/norm" + std::to_string(i);
      x = relu(instance_norm(conv2d(x, p.at(name + "/w"), Tensor(), 2, 1), p.at(norm + "/gamma"), p.at(norm + "/beta")));
    }
  }
  const int batch = x.dim(0);
  x = reshape(x, {batch, static_cast<int>(x.size()) / batch});
  x = relu(linear(x, p.at("ep/fc0/w"), p.at("ep/fc0/b")));
  return split_code(linear(x, p.at("ep/fc1/w"), p.at("ep/fc1/b")), cfg.latent, eps);
}

LatentCode encode_sketch(const ParameterSet& p, const ModelConfig& cfg, const Tensor& seq, const Tensor& eps) {
  if (seq.rank() != 3 || seq.dim(0) != cfg.n_max || seq.dim(2) != 5) {
    throw ShapeError("encode_sketch: expected points padded to [" + std::to_string(cfg.n_max) + ",B,5], got " +
                     shape_str(seq.shape()));
  }
  const Tensor h = bilstm(seq, lstm_weights(p, "es/fwd"), lstm_weights(p, "es/bwd"));
  return split_code(linear(h, p.at("es/fc/w"), p.at("es/fc/b")), cfg.latent, eps);
}

LatentCode resample(const LatentCode& code, const Tensor& eps) {
  return {code.mu, code.sigma_hat, reparameterize(code.mu, code.sigma_hat, eps)};
}

Tensor kl_loss(const std::vector<LatentCode>& codes, KlForm form) {
  if (codes.empty()) throw ShapeError("kl_loss: no latent codes");
  Tensor total;
  for (const LatentCode& c : codes) {
    const Tensor ones = Tensor::full(c.sigma_hat.shape(), 1.0);
    const Tensor inner = form == KlForm::Standard
                             ? sub(sub(add(ones, c.sigma_hat), square(c.mu)), exp(c.sigma_hat))
                             : sub(add(ones, square(c.sigma_hat)), exp(c.sigma_hat));
    const Tensor term = mean(inner);
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, -0.5 / static_cast<double>(codes.size()));
}

}  // namespace p2s::model
