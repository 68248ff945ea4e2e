#include "p2s/eval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "p2s/core/adam.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"

namespace p2s::eval {

using core::Tensor;

SmallCnn Embedder::net() const {
  SmallCnn n;
  n.prefix = "emb";
  n.image_size = cfg.image_size;
  n.out_dim = cfg.dim;
  return n;
}

Tensor Embedder::forward(const Tensor& images) const { return net().forward(params, images); }

std::vector<std::vector<double>> Embedder::embed(const std::vector<sketch::RasterImage>& images) const {
  core::NoGradScope no_grad;
  std::vector<std::vector<double>> out;
  for (std::size_t begin = 0; begin < images.size(); begin += 64) {
    std::vector<const sketch::RasterImage*> chunk;
    for (std::size_t i = begin; i < std::min(images.size(), begin + 64); ++i) chunk.push_back(&images[i]);
    const Tensor y = forward(gray_batch(chunk, cfg.image_size));
    for (int b = 0; b < y.dim(0); ++b) {
      out.emplace_back(y.data().begin() + b * cfg.dim, y.data().begin() + (b + 1) * cfg.dim);
    }
  }
  return out;
}

Embedder init_embedder(const EmbedderConfig& cfg) {
  Embedder e;
  e.cfg = cfg;
  Rng rng(cfg.seed);
  e.net().init(e.params, rng);
  return e;
}

Tensor triplet_loss(const Tensor& anchor, const Tensor& positive, const Tensor& negative, double margin) {
  if (anchor.rank() != 2 || anchor.shape() != positive.shape() || anchor.shape() != negative.shape()) {
    throw ShapeError("triplet_loss: shapes " + core::shape_str(anchor.shape()) + ", " +
                     core::shape_str(positive.shape()) + ", " + core::shape_str(negative.shape()));
  }
  const int rows = anchor.dim(0), dim = anchor.dim(1);
  const auto a = anchor.data(), p = positive.data(), n = negative.data();
  std::vector<double> dp(rows), dn(rows);
  std::vector<char> active(rows);
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    double sp = 0, sn = 0;
    for (int k = 0; k < dim; ++k) {
      const std::size_t i = static_cast<std::size_t>(r) * dim + k;
      sp += (a[i] - p[i]) * (a[i] - p[i]);
      sn += (a[i] - n[i]) * (a[i] - n[i]);
    }
    dp[r] = std::sqrt(sp);
    dn[r] = std::sqrt(sn);
    const double h = dp[r] - dn[r] + margin;
    active[r] = h > 0.0;
    if (active[r]) loss += h;
  }
  const double inv = 1.0 / rows;
  const bool rg = core::detail::recording({&anchor, &positive, &negative});
  Tensor out = core::detail::make_result("triplet_loss", {1}, {loss * inv}, rg);
  if (rg) {
    core::active_tape()->record("triplet_loss", [an = anchor.ptr(), pn = positive.ptr(), nn = negative.ptr(),
                                                 on = out.ptr(), dp, dn, active, rows, dim, inv] {
      if (on->grad.empty()) return;
      const double g = on->grad[0] * inv;
      std::span<double> ga = an->requires_grad ? an->grad_buffer() : std::span<double>{};
      std::span<double> gp = pn->requires_grad ? pn->grad_buffer() : std::span<double>{};
      std::span<double> gn = nn->requires_grad ? nn->grad_buffer() : std::span<double>{};
      for (int r = 0; r < rows; ++r) {
        if (!active[r]) continue;
        const double cp = dp[r] > 0.0 ? g / dp[r] : 0.0;
        const double cn = dn[r] > 0.0 ? g / dn[r] : 0.0;
        for (int k = 0; k < dim; ++k) {
          const std::size_t i = static_cast<std::size_t>(r) * dim + k;
          const double up = cp * (an->value[i] - pn->value[i]);
          const double un = cn * (an->value[i] - nn->value[i]);
          if (!ga.empty()) ga[i] += up - un;
          if (!gp.empty()) gp[i] -= up;
          if (!gn.empty()) gn[i] += un;
        }
      }
    });
  }
  return out;
}

void fit_embedder(Embedder& e, const std::vector<sketch::PhotoSketchPair>& pairs, int steps, std::uint64_t stream) {
  if (pairs.size() < 2) throw DataError("triplet training needs at least two pairs");
  const int side = e.cfg.image_size;
  std::vector<sketch::RasterImage> sketches, photos;
  for (const auto& p : pairs) {
    sketches.push_back(sketch::rasterize(p.sketch, side));
    photos.push_back(p.photo);
  }
  core::AdamState opt;
  opt.lr = e.cfg.learning_rate;
  opt.beta1 = 0.9;
  opt.beta2 = 0.999;
  const std::size_t n = pairs.size();
  for (int step = 0; step < steps; ++step) {
    Rng rng = Rng::derive(e.cfg.seed, stream, static_cast<std::uint64_t>(step));
    std::vector<const sketch::RasterImage*> anc, pos, neg;
    for (int b = 0; b < e.cfg.batch_size; ++b) {
      const std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      anc.push_back(&sketches[i]);
      pos.push_back(&photos[i]);
      neg.push_back(&photos[j]);
    }
    e.params.zero_grad();
    core::Tape tape;
    {
      core::TapeScope scope(tape);
      // one pass over the concatenated batch so the three branches share weights exactly
      std::vector<const sketch::RasterImage*> all = anc;
      all.insert(all.end(), pos.begin(), pos.end());
      all.insert(all.end(), neg.begin(), neg.end());
      const Tensor emb = e.forward(gray_batch(all, side));
      const int bs = e.cfg.batch_size;
      tape.backward(triplet_loss(core::slice_rows(emb, 0, bs), core::slice_rows(emb, bs, bs),
                                 core::slice_rows(emb, 2 * bs, bs), e.cfg.margin));
    }
    std::vector<Tensor> ts = e.params.tensors();
    core::adam_step(ts, opt);
  }
}

Embedder train_triplet_embedder(const std::vector<sketch::PhotoSketchPair>& pairs, const EmbedderConfig& cfg) {
  if (pairs.size() < 2) throw DataError("triplet training needs at least two pairs");
  Embedder e = init_embedder(cfg);
  fit_embedder(e, pairs, cfg.steps, 1);
  return e;
}

double RankingResult::at(int k) const {
  if (acc_at.empty()) throw DataError("empty ranking");
  const int g = acc_at.rbegin()->first;
  return acc_at.at(std::clamp(k, 1, g));
}

RankingResult rank_by_distance(const std::vector<std::vector<double>>& queries,
                               const std::vector<std::vector<double>>& gallery, const std::vector<int>& truth) {
  if (truth.size() != queries.size()) {
    throw DataError("retrieval: " + std::to_string(queries.size()) + " queries but " + std::to_string(truth.size()) +
                    " ground-truth entries");
  }
  if (gallery.empty() || queries.empty()) throw DataError("retrieval: empty query set or gallery");
  const int g = static_cast<int>(gallery.size());
  RankingResult res;
  std::vector<int> hits_at(g + 1, 0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (truth[q] < 0 || truth[q] >= g) throw DataError("retrieval: ground truth index out of range");
    std::vector<double> d(g);
    for (int j = 0; j < g; ++j) {
      if (gallery[j].size() != queries[q].size()) throw ShapeError("retrieval: embedding sizes differ");
      double s = 0;
      for (std::size_t k = 0; k < gallery[j].size(); ++k) s += (queries[q][k] - gallery[j][k]) * (queries[q][k] - gallery[j][k]);
      d[j] = s;
    }
    std::vector<int> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return d[x] < d[y]; });
    const int pos = static_cast<int>(std::find(order.begin(), order.end(), truth[q]) - order.begin());
    ++hits_at[pos + 1];
    res.ranked.push_back(std::move(order));
  }
  int cum = 0;
  for (int k = 1; k <= g; ++k) {
    cum += hits_at[k];
    res.acc_at[k] = static_cast<double>(cum) / static_cast<double>(queries.size());
  }
  return res;
}

RankingResult retrieval_accuracy(const std::vector<sketch::StrokeSequence>& queries,
                                 const std::vector<sketch::RasterImage>& gallery, const std::vector<int>& truth,
                                 const ImageEmbedding& embed, int side) {
  if (truth.size() != queries.size()) throw DataError("retrieval: missing ground truth");
  std::vector<sketch::RasterImage> rasters;
  for (const auto& q : queries) rasters.push_back(sketch::rasterize(q, side));
  return rank_by_distance(embed(rasters), embed(gallery), truth);
}

RankingResult retrieval_accuracy(const std::vector<sketch::StrokeSequence>& queries,
                                 const std::vector<sketch::RasterImage>& gallery, const std::vector<int>& truth,
                                 const Embedder& embedder) {
  return retrieval_accuracy(
      queries, gallery, truth, [&](const std::vector<sketch::RasterImage>& imgs) { return embedder.embed(imgs); },
      embedder.cfg.image_size);
}

std::string AugmentationReport::to_json() const {
  return nlohmann::json{{"baseline", {{"acc_at_1", baseline_at_1}, {"acc_at_10", baseline_at_10}}},
                        {"augmented", {{"acc_at_1", augmented_at_1}, {"acc_at_10", augmented_at_10}}},
                        {"eval_queries", eval_queries}}
      .dump();
}

AugmentationReport augmentation_experiment(const std::vector<sketch::PhotoSketchPair>& real_pairs,
                                           const std::vector<sketch::PhotoSketchPair>& synthetic_pairs,
                                           const AugmentationConfig& cfg) {
  if (cfg.eval_every < 2) throw DataError("augmentation: eval_every must be at least 2");
  std::vector<sketch::PhotoSketchPair> train, held;
  for (std::size_t i = 0; i < real_pairs.size(); ++i) {
    (i % cfg.eval_every == static_cast<std::size_t>(cfg.eval_every - 1) ? held : train).push_back(real_pairs[i]);
  }
  if (train.size() < 2 || held.empty()) throw DataError("augmentation: too few real pairs to split");
  std::set<std::string> held_ids;
  for (const auto& p : held) held_ids.insert(p.id);
  for (const auto& p : synthetic_pairs) {
    if (held_ids.count(p.id)) throw DataError("augmentation: synthetic photo '" + p.id + "' is in the evaluation set");
  }

  std::vector<sketch::StrokeSequence> queries;
  std::vector<sketch::RasterImage> gallery;
  std::vector<int> truth;
  for (std::size_t i = 0; i < held.size(); ++i) {
    queries.push_back(held[i].sketch);
    gallery.push_back(held[i].photo);
    truth.push_back(static_cast<int>(i));
  }

  Embedder baseline = init_embedder(cfg.embedder);
  Embedder augmented = baseline;
  augmented.params = core::ParameterSet{};
  for (const auto& [name, t] : baseline.params.entries()) augmented.params.add(name, t.detach());

  fit_embedder(baseline, train, cfg.finetune_steps, 1);
  if (!synthetic_pairs.empty()) fit_embedder(augmented, synthetic_pairs, cfg.pretrain_steps, 0);
  fit_embedder(augmented, train, cfg.finetune_steps, 1);

  const RankingResult a = retrieval_accuracy(queries, gallery, truth, baseline);
  const RankingResult b = retrieval_accuracy(queries, gallery, truth, augmented);
  AugmentationReport r;
  r.baseline_at_1 = a.at(1);
  r.baseline_at_10 = a.at(10);
  r.augmented_at_1 = b.at(1);
  r.augmented_at_10 = b.at(10);
  r.eval_queries = static_cast<int>(held.size());
  return r;
}

}  // namespace p2s::eval
