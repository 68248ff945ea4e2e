#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "p2s/eval/cnn.hpp"
#include "p2s/sketch/dataset.hpp"

namespace p2s::eval {

struct EmbedderConfig {
  int image_size = 48;
  int dim = 64;
  double margin = 0.2;
  int steps = 300;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Shared-weight CNN mapping rasterized sketches and photos to one space.
struct Embedder {
  EmbedderConfig cfg;
  core::ParameterSet params;

  SmallCnn net() const;
  core::Tensor forward(const core::Tensor& images) const;  // [B, 1, S, S] -> [B, dim]
  std::vector<std::vector<double>> embed(const std::vector<sketch::RasterImage>& images) const;
};

Embedder init_embedder(const EmbedderConfig& cfg);

/// mean_b max(0, |a_b - p_b| - |a_b - n_b| + margin) with Euclidean
/// distances; a zero distance contributes a zero gradient.
core::Tensor triplet_loss(const core::Tensor& anchor, const core::Tensor& positive, const core::Tensor& negative,
                          double margin);

/// Continues training `e` on pairs for `steps` updates (fresh Adam state).
/// Anchor = rasterized sketch, positive = its photo, negative = the photo of
/// a different pair drawn uniformly. Step s uses the generator derived from
/// (stream, s).
void fit_embedder(Embedder& e, const std::vector<sketch::PhotoSketchPair>& pairs, int steps, std::uint64_t stream);

/// init_embedder + fit_embedder(cfg.steps). Throws DataError for fewer than two pairs.
Embedder train_triplet_embedder(const std::vector<sketch::PhotoSketchPair>& pairs, const EmbedderConfig& cfg);

struct RankingResult {
  std::vector<std::vector<int>> ranked;  // per query, gallery indices best first
  std::map<int, double> acc_at;          // every k in 1..gallery size

  double at(int k) const;
};

/// Ranks the gallery for each query by squared Euclidean distance, ties
/// broken by gallery index. truth[q] is the gallery index of query q.
RankingResult rank_by_distance(const std::vector<std::vector<double>>& queries,
                               const std::vector<std::vector<double>>& gallery, const std::vector<int>& truth);

using ImageEmbedding = std::function<std::vector<std::vector<double>>(const std::vector<sketch::RasterImage>&)>;

/// Rasterizes the query sketches at `side`, embeds queries and gallery, and ranks.
RankingResult retrieval_accuracy(const std::vector<sketch::StrokeSequence>& queries,
                                 const std::vector<sketch::RasterImage>& gallery, const std::vector<int>& truth,
                                 const ImageEmbedding& embed, int side = 48);
RankingResult retrieval_accuracy(const std::vector<sketch::StrokeSequence>& queries,
                                 const std::vector<sketch::RasterImage>& gallery, const std::vector<int>& truth,
                                 const Embedder& embedder);

struct AugmentationConfig {
  EmbedderConfig embedder;
  int pretrain_steps = 300;  // on synthetic pairs
  int finetune_steps = 300;  // on real pairs
  int eval_every = 4;        // every k-th real pair is held out for evaluation
};

struct AugmentationReport {
  double baseline_at_1 = 0, baseline_at_10 = 0;
  double augmented_at_1 = 0, augmented_at_10 = 0;
  int eval_queries = 0;

  std::string to_json() const;
};

/// Embedder A trains on the real training pairs only; embedder B starts from
/// the same weights, pretrains on the synthetic pairs and then runs A's
/// exact fine-tuning. Both are scored on the held-out real pairs. Throws
/// DataError when a synthetic pair shares a photo id with the held-out set.
AugmentationReport augmentation_experiment(const std::vector<sketch::PhotoSketchPair>& real_pairs,
                                           const std::vector<sketch::PhotoSketchPair>& synthetic_pairs,
                                           const AugmentationConfig& cfg);

}  // namespace p2s::eval
