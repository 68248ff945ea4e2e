#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "p2s/eval/cnn.hpp"
#include "p2s/sketch/stroke.hpp"

namespace p2s::eval {

struct RecognizerConfig {
  int image_size = 48;
  int steps = 500;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Small CNN classifier over rasterized sketches.
struct Recognizer {
  RecognizerConfig cfg;
  int classes = 0;
  core::ParameterSet params;

  SmallCnn net() const;
  /// Class logits for each image.
  std::vector<std::vector<double>> logits(const std::vector<sketch::RasterImage>& images) const;
};

/// Untrained classifier with weights drawn from cfg.seed. Throws DataError for fewer than two classes.
Recognizer init_recognizer(int classes, const RecognizerConfig& cfg);

/// Cross-entropy training with Adam on labeled rasters; the class count is
/// max(label) + 1 and must be at least two.
Recognizer train_recognizer(const std::vector<sketch::RasterImage>& images, const std::vector<int>& labels,
                            const RecognizerConfig& cfg);

/// 1-based rank of `label` among the scores; equal scores rank the lower class index first.
int rank_of(const std::vector<double>& scores, int label);

/// Fraction of rows whose label ranks within the top k.
double top_k_accuracy(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels, int k);

struct RecognitionReport {
  int classes = 0;
  int k = 0;  // ceil(classes / 2)
  double acc_at_1 = 0;
  double acc_at_k = 0;
};

using Classifier = std::function<std::vector<std::vector<double>>(const std::vector<sketch::RasterImage>&)>;

/// Rasterizes each sketch at `side`, classifies, and reports acc@1 and
/// acc@ceil(K/2). Throws DataError when sketches and labels differ in count
/// or a label is outside the classifier's range.
RecognitionReport recognition_accuracy(const std::vector<sketch::StrokeSequence>& sketches,
                                       const std::vector<int>& labels, const Classifier& classify, int classes,
                                       int side = 48);
RecognitionReport recognition_accuracy(const std::vector<sketch::StrokeSequence>& sketches,
                                       const std::vector<int>& labels, const Recognizer& recognizer);

}  // namespace p2s::eval
