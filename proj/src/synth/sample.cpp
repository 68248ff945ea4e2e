#include "p2s/synth/sample.hpp"

#include <cmath>
#include <limits>

#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"
#include "p2s/model/batch.hpp"
#include "p2s/model/decoders.hpp"
#include "p2s/model/encoders.hpp"

namespace p2s::synth {

using core::Tensor;
using sketch::Point5;

namespace {

// Index drawn from unnormalized log weights; -inf entries are never chosen.
int draw_log_categorical(const std::vector<double>& logw, Rng& rng) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logw) mx = std::max(mx, v);
  std::vector<double> w(logw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - mx) : 0.0;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    acc += w[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Point5 with_pen(double dx, double dy, int pen) { return {dx, dy, pen == 0, pen == 1, pen == 2}; }

Tensor noise(Rng& rng, int latent) {
  std::vector<double> v(latent);
  for (double& x : v) x = rng.normal();
  return Tensor::from({1, latent}, std::move(v));
}

}  // namespace

Point5 sample_gmm(const model::GmmParams& g, double temperature, Rng& rng) {
  if (!(temperature >= 0.0 && temperature <= 1.0)) {
    throw DataError("temperature " + std::to_string(temperature) + " outside [0, 1]");
  }
  if (auto why = model::check_gmm(g); !why.empty()) throw DataError("sample_gmm: " + why);
  if (temperature == 0.0) {
    const int j = argmax(g.pi);
    return with_pen(g.mu_x[j], g.mu_y[j], argmax(g.q));
  }
  const int m = g.mixtures();
  std::vector<double> logw(m);
  for (int j = 0; j < m; ++j) {
    logw[j] = g.pi[j] > 0.0 ? std::log(g.pi[j]) / temperature : -std::numeric_limits<double>::infinity();
  }
  const int j = draw_log_categorical(logw, rng);
  const double s = std::sqrt(temperature);
  const double sx = g.sigma_x[j] * s, sy = g.sigma_y[j] * s, rho = g.rho[j];
  const double z1 = rng.normal(), z2 = rng.normal();
  const double dx = g.mu_x[j] + sx * z1;
  const double dy = g.mu_y[j] + sy * (rho * z1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * z2);
  std::vector<double> pen_logw{g.q[0] / temperature, g.q[1] / temperature, g.q[2] / temperature};
  return with_pen(dx, dy, draw_log_categorical(pen_logw, rng));
}

sketch::RasterImage fit_photo(const sketch::RasterImage& photo, const model::ModelConfig& cfg) {
  sketch::require_valid(photo);
  sketch::RasterImage img = photo;
  if (img.channels != cfg.image_channels) {
    img = sketch::to_grayscale(img);
    if (cfg.image_channels > 1) {
      sketch::RasterImage wide = sketch::RasterImage::blank(img.height, img.width, cfg.image_channels);
      for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
          for (int ch = 0; ch < cfg.image_channels; ++ch) wide.at(r, c, ch) = img.at(r, c, 0);
        }
      }
      img = std::move(wide);
    }
  }
  if (img.height != cfg.image_size || img.width != cfg.image_size) img = sketch::resize(img, cfg.image_size, cfg.image_size);
  return img;
}

sketch::StrokeSequence decode_latent(const core::ParameterSet& p, const model::ModelConfig& cfg, const Tensor& z,
                                     double temperature, Rng& rng) {
  if (z.rank() != 2 || z.dim(0) != 1) throw ShapeError("decode_latent: expects a single latent row [1, N_z]");
  core::NoGradScope no_grad;
  model::SketchDecoderState st = model::decoder_start(p, cfg, z);
  Point5 prev = Point5::start_token();
  std::vector<Point5> real;
  while (static_cast<int>(real.size()) < cfg.n_max - 1) {
    const Tensor in = Tensor::from({1, 5}, {prev.dx, prev.dy, double(prev.p1), double(prev.p2), double(prev.p3)});
    const Tensor head = model::decoder_step(p, st, in);
    const Point5 next = sample_gmm(model::gmm_from_row(head.data(), cfg.mixtures), temperature, rng);
    if (next.p3) break;
    real.push_back(next);
    prev = next;
  }
  return sketch::pad_to_max(sketch::StrokeSequence::from_real(std::move(real)), cfg.n_max);
}

sketch::StrokeSequence sample_sketch(const sketch::RasterImage& photo, const core::ParameterSet& p,
                                     const model::ModelConfig& cfg, double temperature, Rng& rng,
                                     bool resample_latent) {
  core::NoGradScope no_grad;
  const sketch::RasterImage img = fit_photo(photo, cfg);
  const Tensor eps = resample_latent ? noise(rng, cfg.latent) : Tensor::zeros({1, cfg.latent});
  const model::LatentCode code = model::encode_photo(p, cfg, model::photos_tensor({&img}), eps);
  return decode_latent(p, cfg, code.z, temperature, rng);
}

sketch::StrokeSequence reconstruct_sketch(const sketch::StrokeSequence& seq, const core::ParameterSet& p,
                                          const model::ModelConfig& cfg, double temperature, Rng& rng) {
  core::NoGradScope no_grad;
  const sketch::StrokeSequence padded = sketch::pad_to_max(seq, cfg.n_max);
  const model::LatentCode code =
      model::encode_sketch(p, cfg, model::sequence_tensor({&padded}), Tensor::zeros({1, cfg.latent}));
  return decode_latent(p, cfg, code.z, temperature, rng);
}

std::vector<sketch::StrokeSequence> sample_variations(const sketch::RasterImage& photo, const core::ParameterSet& p,
                                                      const model::ModelConfig& cfg, int k, double temperature,
                                                      Rng& rng) {
  if (k < 1) throw DataError("sample_variations: k must be at least 1");
  std::vector<sketch::StrokeSequence> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    Rng child(rng.next());
    out.push_back(sample_sketch(photo, p, cfg, temperature, child, true));
  }
  return out;
}

}  // namespace p2s::synth
