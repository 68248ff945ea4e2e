#include "p2s/model/init.hpp"

#include <cmath>

#include "p2s/core/layers.hpp"

namespace p2s::model {

using core::Tensor;

namespace {

Tensor uniform(Rng& rng, core::Shape shape, int fan_in, double k) {
  const double limit = std::sqrt(k / fan_in);
  std::vector<double> v(core::numel(shape));
  for (double& x : v) x = rng.uniform(-limit, limit);
  return Tensor::from(std::move(shape), std::move(v));
}

// Input kernel, orthogonal recurrent kernel and bias with forget gate at 1.
void add_lstm(core::ParameterSet& p, const std::string& name, int in, int h, Rng& rng) {
  p.add(name + "/wx", uniform(rng, {in, 4 * h}, in, 3.0));
  std::vector<double> wh(static_cast<std::size_t>(h) * 4 * h);
  for (int gate = 0; gate < 4; ++gate) {
    const std::vector<double> q = orthogonal(h, h, rng);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < h; ++c) wh[static_cast<std::size_t>(r) * 4 * h + gate * h + c] = q[r * h + c];
  }
  p.add(name + "/wh", Tensor::from({h, 4 * h}, wh));
  std::vector<double> b(4 * h, 0.0);
  for (int j = h; j < 2 * h; ++j) b[j] = 1.0;
  p.add(name + "/b", Tensor::from({4 * h}, b));
}

}  // namespace

std::vector<double> orthogonal(int rows, int cols, Rng& rng) {
  const bool tall = rows >= cols;
  const int n = tall ? rows : cols, k = tall ? cols : rows;
  // k orthonormal vectors of length n
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < k) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += v[i] * b[i];
        for (int i = 0; i < n; ++i) v[i] -= d * b[i];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r * cols + c] = tall ? basis[c][r] : basis[r][c];
  return out;
}

core::ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  core::ParameterSet p;
  const auto& ch = cfg.conv_channels;
  const int layers = static_cast<int>(ch.size());
  const std::vector<int> trail = cfg.spatial_trail();
  const int flat = ch.back() * trail.back() * trail.back();
  const int nz = cfg.latent;

  // photo encoder
  for (int i = 0; i < layers; ++i) {
    const int in = i == 0 ? cfg.image_channels : ch[i - 1];
    const std::string name = "ep/conv" + std::to_string(i);
    p.add(name + "/w", uniform(rng, {ch[i], in, 3, 3}, in * 9, 6.0));
    if (i == 0) {
      p.add(name + "/b", Tensor::zeros({ch[i]}));
    } else {
      p.add("ep/norm" + std::to_string(i) + "/gamma", Tensor::full({ch[i]}, 1.0));
      p.add("ep/norm" + std::to_string(i) + "/beta", Tensor::zeros({ch[i]}));
    }
  }
  p.add("ep/fc0/w", uniform(rng, {flat, cfg.photo_fc}, flat, 6.0));
  p.add("ep/fc0/b", Tensor::zeros({cfg.photo_fc}));
  p.add("ep/fc1/w", uniform(rng, {cfg.photo_fc, 2 * nz}, cfg.photo_fc, 3.0));
  p.add("ep/fc1/b", Tensor::zeros({2 * nz}));

  // sketch encoder
  add_lstm(p, "es/fwd", 5, cfg.encoder_hidden, rng);
  add_lstm(p, "es/bwd", 5, cfg.encoder_hidden, rng);
  p.add("es/fc/w", uniform(rng, {2 * cfg.encoder_hidden, 2 * nz}, 2 * cfg.encoder_hidden, 3.0));
  p.add("es/fc/b", Tensor::zeros({2 * nz}));

  // sketch decoder: input kernel split into point and latent parts
  const int hd = cfg.decoder_hidden;
  p.add("ds/init/w", uniform(rng, {nz, 2 * hd}, nz, 3.0));
  p.add("ds/init/b", Tensor::zeros({2 * hd}));
  add_lstm(p, "ds/lstm", 5, hd, rng);
  p.add("ds/wz", uniform(rng, {nz, 4 * hd}, nz + 5, 3.0));
  p.add("ds/out/w", uniform(rng, {hd, cfg.head_width()}, hd, 3.0));
  p.add("ds/out/b", Tensor::zeros({cfg.head_width()}));

  // photo decoder mirrors the encoder
  p.add("dp/fc/w", uniform(rng, {nz, flat}, nz, 6.0));
  p.add("dp/fc/b", Tensor::zeros({flat}));
  for (int j = 0; j < layers; ++j) {
    const int in = ch[layers - 1 - j];
    const int out = j + 1 < layers ? ch[layers - 2 - j] : cfg.image_channels;
    const int from = trail[layers - j], to = trail[layers - 1 - j];
    const int k = to - 2 * from + 4;
    const std::string name = "dp/deconv" + std::to_string(j);
    p.add(name + "/w", uniform(rng, {in, out, k, k}, in * k * k / 4 > 0 ? in * k * k / 4 : 1, j + 1 < layers ? 6.0 : 3.0));
    if (j + 1 < layers) {
      p.add("dp/norm" + std::to_string(j) + "/gamma", Tensor::full({out}, 1.0));
      p.add("dp/norm" + std::to_string(j) + "/beta", Tensor::zeros({out}));
    } else {
      p.add(name + "/b", Tensor::zeros({out}));
    }
  }
  return p;
}

std::vector<std::string> subnet_names(const core::ParameterSet& params, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& [name, t] : params.entries())
    if (name.rfind(prefix + "/", 0) == 0) out.push_back(name);
  return out;
}

}  // namespace p2s::model
