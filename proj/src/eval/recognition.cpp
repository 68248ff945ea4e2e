#include "p2s/eval/recognition.hpp"

#include <algorithm>

#include "p2s/core/adam.hpp"
#include "p2s/core/losses.hpp"
#include "p2s/errors.hpp"
#include "p2s/objective/train.hpp"

namespace p2s::eval {

using core::Tensor;

SmallCnn Recognizer::net() const {
  SmallCnn n;
  n.prefix = "rec";
  n.image_size = cfg.image_size;
  n.out_dim = classes;
  return n;
}

std::vector<std::vector<double>> Recognizer::logits(const std::vector<sketch::RasterImage>& images) const {
  core::NoGradScope no_grad;
  std::vector<std::vector<double>> out;
  const SmallCnn n = net();
  for (std::size_t begin = 0; begin < images.size(); begin += 64) {
    std::vector<const sketch::RasterImage*> chunk;
    for (std::size_t i = begin; i < std::min(images.size(), begin + 64); ++i) chunk.push_back(&images[i]);
    const Tensor y = n.forward(params, gray_batch(chunk, cfg.image_size));
    for (int b = 0; b < y.dim(0); ++b) {
      out.emplace_back(y.data().begin() + b * classes, y.data().begin() + (b + 1) * classes);
    }
  }
  return out;
}

Recognizer init_recognizer(int classes, const RecognizerConfig& cfg) {
  if (classes < 2) throw DataError("recognizer needs at least two classes, got " + std::to_string(classes));
  Recognizer r;
  r.cfg = cfg;
  r.classes = classes;
  Rng rng(cfg.seed);
  r.net().init(r.params, rng);
  return r;
}

Recognizer train_recognizer(const std::vector<sketch::RasterImage>& images, const std::vector<int>& labels,
                            const RecognizerConfig& cfg) {
  if (images.size() != labels.size()) throw DataError("train_recognizer: image and label counts differ");
  if (images.empty()) throw DataError("train_recognizer: no images");
  for (int l : labels) {
    if (l < 0) throw DataError("train_recognizer: negative label");
  }
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<bool> seen(classes, false);
  for (int l : labels) seen[l] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2) throw DataError("train_recognizer: single class");
  Recognizer r = init_recognizer(classes, cfg);
  const SmallCnn n = r.net();
  core::AdamState opt;
  opt.lr = cfg.learning_rate;
  opt.beta1 = 0.9;
  opt.beta2 = 0.999;
  for (int step = 0; step < cfg.steps; ++step) {
    Rng rng = Rng::derive(cfg.seed, 0x5ec, static_cast<std::uint64_t>(step));
    const auto idx = objective::batch_indices(images.size(), cfg.batch_size, rng);
    std::vector<const sketch::RasterImage*> batch;
    std::vector<int> y;
    for (std::size_t i : idx) {
      batch.push_back(&images[i]);
      y.push_back(labels[i]);
    }
    r.params.zero_grad();
    core::Tape tape;
    {
      core::TapeScope scope(tape);
      tape.backward(core::softmax_cross_entropy(n.forward(r.params, gray_batch(batch, cfg.image_size)), y));
    }
    std::vector<Tensor> ts = r.params.tensors();
    core::adam_step(ts, opt);
  }
  return r;
}

int rank_of(const std::vector<double>& scores, int label) {
  int rank = 1;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j) {
    if (scores[j] > scores[label] || (scores[j] == scores[label] && j < label)) ++rank;
  }
  return rank;
}

double top_k_accuracy(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels, int k) {
  if (scores.size() != labels.size()) throw DataError("top_k_accuracy: score and label counts differ");
  if (labels.empty()) throw DataError("top_k_accuracy: nothing to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(scores[i].size())) {
      throw DataError("label " + std::to_string(labels[i]) + " outside the classifier's " +
                      std::to_string(scores[i].size()) + " classes");
    }
    hits += rank_of(scores[i], labels[i]) <= k;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

RecognitionReport recognition_accuracy(const std::vector<sketch::StrokeSequence>& sketches,
                                       const std::vector<int>& labels, const Classifier& classify, int classes,
                                       int side) {
  if (sketches.size() != labels.size()) {
    throw DataError("recognition_accuracy: " + std::to_string(sketches.size()) + " sketches but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l < 0 || l >= classes) throw DataError("recognition_accuracy: label " + std::to_string(l) + " out of range");
  }
  std::vector<sketch::RasterImage> rasters;
  rasters.reserve(sketches.size());
  for (const auto& s : sketches) rasters.push_back(sketch::rasterize(s, side));
  const auto scores = classify(rasters);
  RecognitionReport r;
  r.classes = classes;
  r.k = (classes + 1) / 2;
  r.acc_at_1 = top_k_accuracy(scores, labels, 1);
  r.acc_at_k = top_k_accuracy(scores, labels, r.k);
  return r;
}

RecognitionReport recognition_accuracy(const std::vector<sketch::StrokeSequence>& sketches,
                                       const std::vector<int>& labels, const Recognizer& recognizer) {
  return recognition_accuracy(
      sketches, labels, [&](const std::vector<sketch::RasterImage>& imgs) { return recognizer.logits(imgs); },
      recognizer.classes, recognizer.cfg.image_size);
}

}  // namespace p2s::eval
