#include "p2s/objective/losses.hpp"

#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"
#include "p2s/model/batch.hpp"
#include "p2s/model/decoders.hpp"

namespace p2s::objective {

using core::Tensor;
using namespace model;

Batch Batch::from(const std::vector<const sketch::PhotoSketchPair*>& pairs) {
  if (pairs.empty()) throw DataError("empty batch");
  std::vector<const sketch::RasterImage*> photos;
  Batch b;
  for (const auto* p : pairs) {
    photos.push_back(&p->photo);
    b.targets.push_back(&p->sketch);
  }
  b.photos = photos_tensor(photos);
  b.points = sequence_tensor(b.targets);
  b.teacher = teacher_inputs(b.targets);
  return b;
}

namespace {

Tensor gaussian(Rng& rng, int batch, int latent) {
  std::vector<double> v(static_cast<std::size_t>(batch) * latent);
  for (double& x : v) x = rng.normal();
  return Tensor::from({batch, latent}, std::move(v));
}

void require_batch(const Batch& batch) {
  if (batch.size() == 0) throw DataError("empty batch");
}

TwoPartLoss two_part(const Tensor& sketch_term, const Tensor& photo_term) {
  return {core::add(sketch_term, photo_term), sketch_term, photo_term};
}

}  // namespace

Noise Noise::draw(Rng& rng, int batch, int latent) {
  Noise n;
  n.photo_to_sketch = gaussian(rng, batch, latent);
  n.sketch_to_photo = gaussian(rng, batch, latent);
  n.photo_to_photo = gaussian(rng, batch, latent);
  n.sketch_to_sketch = gaussian(rng, batch, latent);
  return n;
}

Noise Noise::zeros(int batch, int latent) {
  const Tensor z = Tensor::zeros({batch, latent});
  return {z, z, z, z};
}

TwoPartLoss supervised_loss(const core::ParameterSet& p, const ModelConfig& cfg, const Batch& batch,
                            const Noise& noise) {
  require_batch(batch);
  const LatentCode from_photo = encode_photo(p, cfg, batch.photos, noise.photo_to_sketch);
  const LatentCode from_sketch = encode_sketch(p, cfg, batch.points, noise.sketch_to_photo);
  return two_part(
      rnn_loss(decode_sketch_teacher_forced(p, cfg, from_photo.z, batch.teacher), batch.targets, cfg.mixtures),
      photo_l2_loss(decode_photo(p, cfg, from_sketch.z), batch.photos));
}

TwoPartLoss shortcut_loss(const core::ParameterSet& p, const ModelConfig& cfg, const Batch& batch,
                          const Noise& noise) {
  require_batch(batch);
  const LatentCode from_photo = encode_photo(p, cfg, batch.photos, noise.photo_to_photo);
  const LatentCode from_sketch = encode_sketch(p, cfg, batch.points, noise.sketch_to_sketch);
  return two_part(
      rnn_loss(decode_sketch_teacher_forced(p, cfg, from_sketch.z, batch.teacher), batch.targets, cfg.mixtures),
      photo_l2_loss(decode_photo(p, cfg, from_photo.z), batch.photos));
}

FullLoss full_loss(const core::ParameterSet& p, const ModelConfig& cfg, const Batch& batch, const Noise& noise,
                   const LossWeights& w) {
  require_batch(batch);
  const LatentCode photo_a = encode_photo(p, cfg, batch.photos, noise.photo_to_sketch);
  const LatentCode sketch_a = encode_sketch(p, cfg, batch.points, noise.sketch_to_photo);
  const LatentCode photo_b = resample(photo_a, noise.photo_to_photo);
  const LatentCode sketch_b = resample(sketch_a, noise.sketch_to_sketch);

  FullLoss out;
  out.supervised = two_part(
      rnn_loss(decode_sketch_teacher_forced(p, cfg, photo_a.z, batch.teacher), batch.targets, cfg.mixtures),
      photo_l2_loss(decode_photo(p, cfg, sketch_a.z), batch.photos));
  out.kl = kl_loss({photo_a, sketch_a, photo_b, sketch_b}, w.kl_form);
  out.total = out.supervised.total;
  if (w.lambda_shortcut != 0.0) {
    out.shortcut = two_part(
        rnn_loss(decode_sketch_teacher_forced(p, cfg, sketch_b.z, batch.teacher), batch.targets, cfg.mixtures),
        photo_l2_loss(decode_photo(p, cfg, photo_b.z), batch.photos));
    out.total = core::add(out.total, core::scale(out.shortcut.total, w.lambda_shortcut));
  }
  if (w.lambda_kl != 0.0) out.total = core::add(out.total, core::scale(out.kl, w.lambda_kl));
  return out;
}

double combine(double supervised, double shortcut, double kl, const LossWeights& w) {
  double total = supervised;
  if (w.lambda_shortcut != 0.0) total += w.lambda_shortcut * shortcut;
  if (w.lambda_kl != 0.0) total += w.lambda_kl * kl;
  return total;
}

}  // namespace p2s::objective
