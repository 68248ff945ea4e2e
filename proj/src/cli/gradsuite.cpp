#include "p2s/cli/gradsuite.hpp"

#include <algorithm>

#include "p2s/core/gradcheck.hpp"
#include "p2s/core/layers.hpp"
#include "p2s/core/losses.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"
#include "p2s/eval/retrieval.hpp"
#include "p2s/model/batch.hpp"
#include "p2s/model/decoders.hpp"
#include "p2s/model/encoders.hpp"
#include "p2s/model/gmm.hpp"
#include "p2s/model/init.hpp"
#include "p2s/objective/losses.hpp"
#include "p2s/rng.hpp"

namespace p2s::cli {

using namespace core;
using sketch::Point5;
using sketch::StrokeSequence;

namespace {

Tensor rnd(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Reduces any tensor to a scalar with fixed random weights so every output
// element carries a distinct gradient.
Tensor project(const Tensor& t, const Tensor& w) { return sum(mul(t, w)); }

StrokeSequence random_sequence(Rng& rng, int n_max) {
  const int n_s = 1 + static_cast<int>(rng.below(n_max - 1));
  std::vector<Point5> pts;
  for (int i = 0; i < n_s; ++i) {
    const bool lift = i + 1 == n_s || rng.uniform() < 0.3;
    pts.push_back({rng.normal(), rng.normal(), lift ? 0 : 1, lift ? 1 : 0, 0});
  }
  return sketch::pad_to_max(StrokeSequence::from_real(pts), n_max);
}

// A unary elementwise op on a [3,4] input.
GradCase unary(std::string name, Tensor (*op)(const Tensor&), double lo = -1.0, double hi = 1.0) {
  return {name, [op, lo, hi](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = rnd(rng, {3, 4}, lo, hi);
            const Tensor w = rnd(rng, {3, 4});
            return grad_check([&] { return project(op(x), w); }, std::span(&x, 1));
          }};
}

// A binary op on [3,4] and `b_shape`.
GradCase binary(std::string name, Tensor (*op)(const Tensor&, const Tensor&), Shape b_shape) {
  return {name, [op, b_shape](std::uint64_t seed) {
            Rng rng(seed);
            Tensor in[] = {rnd(rng, {3, 4}), rnd(rng, b_shape)};
            const Tensor w = rnd(rng, {3, 4});
            return grad_check([&] { return project(op(in[0], in[1]), w); }, in);
          }};
}

LstmWeights random_lstm(Rng& rng, int d, int h) {
  return {rnd(rng, {d, 4 * h}, -0.5, 0.5), rnd(rng, {h, 4 * h}, -0.5, 0.5), rnd(rng, {4 * h}, -0.5, 0.5)};
}

// The tiny model with random weights, a 2-pair micro-batch and its noise.
struct MicroBatch {
  model::ModelConfig cfg = model::ModelConfig::tiny();
  ParameterSet params;
  std::vector<sketch::PhotoSketchPair> pairs;
  objective::Batch batch;
  objective::Noise noise;

  explicit MicroBatch(std::uint64_t seed) {
    Rng rng(seed);
    params = model::init_params(cfg, seed);
    for (int i = 0; i < 2; ++i) {
      sketch::PhotoSketchPair p;
      p.photo = sketch::RasterImage::blank(cfg.image_size, cfg.image_size, cfg.image_channels);
      for (double& v : p.photo.data) v = rng.uniform();
      p.sketch = random_sequence(rng, cfg.n_max);
      pairs.push_back(std::move(p));
    }
    batch = objective::Batch::from({&pairs[0], &pairs[1]});
    noise = objective::Noise::draw(rng, 2, cfg.latent);
  }

  double check(const std::function<Tensor()>& f) {
    std::vector<Tensor> inputs = params.tensors();
    return grad_check(f, inputs);
  }
};

std::vector<GradCase> build() {
  std::vector<GradCase> c;
  c.push_back(binary("matmul", matmul, {4, 4}));
  c.back().run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tensor in[] = {rnd(rng, {3, 5}), rnd(rng, {5, 4})};
    const Tensor w = rnd(rng, {3, 4});
    return grad_check([&] { return project(matmul(in[0], in[1]), w); }, in);
  };
  c.push_back(binary("add", add, {4}));
  c.push_back(binary("sub", sub, {3, 4}));
  c.push_back(binary("mul", mul, {4}));
  c.push_back({"scale", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 4});
                 const Tensor w = rnd(rng, {3, 4});
                 return grad_check([&] { return project(scale(x, -1.7), w); }, std::span(&x, 1));
               }});
  c.push_back(unary("tanh", core::tanh));
  c.push_back(unary("sigmoid", sigmoid));
  c.push_back(unary("relu", relu));
  c.push_back(unary("exp", core::exp));
  c.push_back(unary("log", core::log, 0.5, 2.0));
  c.push_back(unary("square", square));
  c.push_back(unary("softmax", softmax));
  c.push_back({"sum", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 4});
                 return grad_check([&] { return sum(square(x)); }, std::span(&x, 1));
               }});
  c.push_back({"mean", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 4});
                 return grad_check([&] { return mean(square(x)); }, std::span(&x, 1));
               }});
  c.push_back({"reshape", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 4});
                 const Tensor w = rnd(rng, {2, 6});
                 return grad_check([&] { return project(reshape(x, {2, 6}), w); }, std::span(&x, 1));
               }});
  c.push_back({"concat_cols", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {3, 2}), rnd(rng, {3, 3})};
                 const Tensor w = rnd(rng, {3, 5});
                 return grad_check([&] { return project(concat_cols(in[0], in[1]), w); }, in);
               }});
  c.push_back({"slice_cols", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 5});
                 const Tensor w = rnd(rng, {3, 2});
                 return grad_check([&] { return project(slice_cols(x, 2, 2), w); }, std::span(&x, 1));
               }});
  c.push_back({"slice_rows", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {4, 3});
                 const Tensor w = rnd(rng, {2, 3});
                 return grad_check([&] { return project(slice_rows(x, 1, 2), w); }, std::span(&x, 1));
               }});
  c.push_back({"concat_rows", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {1, 3}), rnd(rng, {2, 3})};
                 const Tensor w = rnd(rng, {4, 3});
                 return grad_check([&] { return project(concat_rows({in[1], in[0], in[0]}), w); }, in);
               }});
  c.push_back({"linear", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {3, 5}), rnd(rng, {5, 4}), rnd(rng, {4})};
                 const Tensor w = rnd(rng, {3, 4});
                 return grad_check([&] { return project(linear(in[0], in[1], in[2]), w); }, in);
               }});
  c.push_back({"conv2d", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 2, 5, 5}), rnd(rng, {3, 2, 3, 3}), rnd(rng, {3})};
                 const Tensor w = rnd(rng, {2, 3, 3, 3});
                 return grad_check([&] { return project(conv2d(in[0], in[1], in[2], 2, 1), w); }, in);
               }});
  c.push_back({"conv2d_transpose", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 3, 3, 3}), rnd(rng, {3, 2, 4, 4}), rnd(rng, {2})};
                 const Tensor w = rnd(rng, {2, 2, 6, 6});
                 return grad_check([&] { return project(conv2d_transpose(in[0], in[1], in[2], 2, 1), w); }, in);
               }});
  c.push_back({"instance_norm", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 3, 2, 3}, -2, 2), rnd(rng, {3}, 0.5, 1.5), rnd(rng, {3})};
                 const Tensor w = rnd(rng, {2, 3, 2, 3});
                 return grad_check([&] { return project(instance_norm(in[0], in[1], in[2]), w); }, in);
               }});
  c.push_back({"lstm_cell", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const LstmWeights lw = random_lstm(rng, 3, 4);
                 Tensor in[] = {rnd(rng, {2, 3}), rnd(rng, {2, 4}), rnd(rng, {2, 4}), lw.wx, lw.wh, lw.bias};
                 const Tensor wh = rnd(rng, {2, 4}), wc = rnd(rng, {2, 4});
                 return grad_check(
                     [&] {
                       const auto s1 = lstm_cell(in[0], {in[1], in[2]}, lw);
                       const auto s2 = lstm_cell(in[0], s1, lw);
                       return add(project(s2.h, wh), project(s2.c, wc));
                     },
                     in);
               }});
  c.push_back({"lstm_recurrence", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 12}), rnd(rng, {2, 3}), rnd(rng, {2, 3}), rnd(rng, {3, 12}, -0.5, 0.5)};
                 const Tensor wh = rnd(rng, {2, 3}), wc = rnd(rng, {2, 3});
                 return grad_check(
                     [&] {
                       const auto s = lstm_recurrence(in[0], {in[1], in[2]}, in[3]);
                       return add(project(s.h, wh), project(s.c, wc));
                     },
                     in);
               }});
  c.push_back({"bilstm", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const LstmWeights f = random_lstm(rng, 2, 3), b = random_lstm(rng, 2, 3);
                 Tensor in[] = {rnd(rng, {4, 2, 2}), f.wx, f.wh, f.bias, b.wx, b.wh, b.bias};
                 const Tensor w = rnd(rng, {2, 6});
                 return grad_check([&] { return project(bilstm(in[0], f, b), w); }, in);
               }});
  c.push_back({"mse", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {3, 4}), rnd(rng, {3, 4})};
                 return grad_check([&] { return mse(in[0], in[1]); }, in);
               }});
  c.push_back({"softmax_cross_entropy", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor x = rnd(rng, {3, 4}, -2, 2);
                 return grad_check([&] { return softmax_cross_entropy(x, {0, 3, 1}); }, std::span(&x, 1));
               }});
  c.push_back({"triplet_loss", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {4, 5}), rnd(rng, {4, 5}), rnd(rng, {4, 5})};
                 return grad_check([&] { return eval::triplet_loss(in[0], in[1], in[2], 10.0); }, in);
               }});
  c.push_back({"reparameterize", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 3}), rnd(rng, {2, 3})};
                 const Tensor eps = rnd(rng, {2, 3}, -2, 2), w = rnd(rng, {2, 3});
                 return grad_check([&] { return project(model::reparameterize(in[0], in[1], eps), w); }, in);
               }});
  c.push_back({"kl_loss", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Tensor in[] = {rnd(rng, {2, 3}), rnd(rng, {2, 3}), rnd(rng, {2, 3}), rnd(rng, {2, 3})};
                 const Tensor eps = Tensor::zeros({2, 3});
                 return grad_check(
                     [&] {
                       return model::kl_loss({{in[0], in[1], eps}, {in[2], in[3], eps}});
                     },
                     in);
               }});
  c.push_back({"rnn_loss", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const int m = 3, t = 5, b = 2;
                 std::vector<StrokeSequence> seqs{random_sequence(rng, t), random_sequence(rng, t)};
                 std::vector<const StrokeSequence*> ptrs{&seqs[0], &seqs[1]};
                 Tensor head = rnd(rng, {t * b, 6 * m + 3});
                 return grad_check([&] { return model::rnn_loss(head, ptrs, m); }, std::span(&head, 1));
               }});
  c.push_back({"encode_photo", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] {
                   const auto code = model::encode_photo(mb.params, mb.cfg, mb.batch.photos, mb.noise.photo_to_sketch);
                   return sum(mul(code.z, code.z));
                 });
               }});
  c.push_back({"encode_sketch", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] {
                   const auto code = model::encode_sketch(mb.params, mb.cfg, mb.batch.points, mb.noise.sketch_to_photo);
                   return sum(mul(code.z, code.z));
                 });
               }});
  c.push_back({"decode_photo", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 Rng rng(seed + 1);
                 const Tensor z = rnd(rng, {2, mb.cfg.latent});
                 return mb.check([&] { return model::photo_l2_loss(model::decode_photo(mb.params, mb.cfg, z), mb.batch.photos); });
               }});
  c.push_back({"decode_sketch", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 Rng rng(seed + 1);
                 const Tensor z = rnd(rng, {2, mb.cfg.latent});
                 return mb.check([&] {
                   return model::rnn_loss(model::decode_sketch_teacher_forced(mb.params, mb.cfg, z, mb.batch.teacher),
                                          mb.batch.targets, mb.cfg.mixtures);
                 });
               }});
  c.push_back({"L_rnn", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] { return objective::supervised_loss(mb.params, mb.cfg, mb.batch, mb.noise).sketch_term; });
               }});
  c.push_back({"L_KL", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] { return objective::full_loss(mb.params, mb.cfg, mb.batch, mb.noise, {}).kl; });
               }});
  c.push_back({"L_supervised", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] { return objective::supervised_loss(mb.params, mb.cfg, mb.batch, mb.noise).total; });
               }});
  c.push_back({"L_shortcut", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] { return objective::shortcut_loss(mb.params, mb.cfg, mb.batch, mb.noise).total; });
               }});
  c.push_back({"L_full", [](std::uint64_t seed) {
                 MicroBatch mb(seed);
                 return mb.check([&] { return objective::full_loss(mb.params, mb.cfg, mb.batch, mb.noise, {}).total; });
               }});
  return c;
}

}  // namespace

const std::vector<GradCase>& grad_suite() {
  static const std::vector<GradCase> suite = build();
  return suite;
}

std::vector<GradResult> run_grad_suite(const std::string& only, int seeds) {
  std::vector<GradResult> out;
  for (const auto& gc : grad_suite()) {
    if (!only.empty() && gc.name != only) continue;
    GradResult r{gc.name, 0.0};
    for (int s = 0; s < seeds; ++s) r.max_error = std::max(r.max_error, gc.run(static_cast<std::uint64_t>(s)));
    out.push_back(r);
  }
  if (out.empty()) throw DataError("no gradient check named '" + only + "'");
  return out;
}

}  // namespace p2s::cli
