#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "p2s/core/gradcheck.hpp"
#include "p2s/errors.hpp"
#include "p2s/eval/chamfer.hpp"
#include "p2s/eval/recognition.hpp"
#include "p2s/eval/retrieval.hpp"
#include "p2s/sketch/toy.hpp"

using namespace p2s;
using namespace p2s::eval;
using core::Tensor;
using sketch::RasterImage;
using sketch::StrokeSequence;

namespace {

bool same_bits(const core::ParameterSet& a, const core::ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.entries()[i].second.data(), y = b.entries()[i].second.data();
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

// Bars: class 0 horizontal, class 1 vertical, at random positions.
std::pair<std::vector<RasterImage>, std::vector<int>> bars(int n, int side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RasterImage> imgs;
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    auto img = RasterImage::blank(side, side, 1);
    const int cls = i % 2;
    const int at = 4 + static_cast<int>(rng.below(side - 8));
    const int from = static_cast<int>(rng.below(side / 3)), len = side / 2;
    for (int k = from; k < from + len; ++k) (cls == 0 ? img.at(at, k, 0) : img.at(k, at, 0)) = 1.0;
    imgs.push_back(std::move(img));
    labels.push_back(cls);
  }
  return {imgs, labels};
}

// Every gallery index ordered by (distance, index), computed by counting.
std::vector<int> oracle_order(const std::vector<double>& d) {
  const int g = static_cast<int>(d.size());
  std::vector<int> order(g);
  for (int j = 0; j < g; ++j) {
    int before = 0;
    for (int i = 0; i < g; ++i) before += d[i] < d[j] || (d[i] == d[j] && i < j);
    order[before] = j;
  }
  return order;
}

}  // namespace

TEST_CASE("top-k accuracy on a hand-ranked example") {
  const std::vector<std::vector<double>> scores{{2, 1, 0}, {0.5, 3, 1}, {1, 1, 5}};
  const std::vector<int> labels{0, 2, 1};
  CHECK(rank_of(scores[0], 0) == 1);
  CHECK(rank_of(scores[1], 2) == 2);
  CHECK(rank_of(scores[2], 1) == 3);  // tied with class 0, which ranks first
  CHECK(top_k_accuracy(scores, labels, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(top_k_accuracy(scores, labels, 2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(top_k_accuracy(scores, labels, 3) == 1.0);
  CHECK_THROWS_AS(top_k_accuracy(scores, {0, 1}, 1), DataError);
  CHECK_THROWS_AS(top_k_accuracy(scores, {0, 1, 3}, 1), DataError);
}

TEST_CASE("recognition accuracy for degenerate and random classifiers") {
  const auto pairs = sketch::make_toy_pairs(40, 1, 48);
  std::vector<StrokeSequence> sketches;
  for (const auto& p : pairs) sketches.push_back(p.sketch);
  const std::vector<int> zeros(sketches.size(), 0);
  const Classifier always_zero = [](const std::vector<RasterImage>& imgs) {
    return std::vector<std::vector<double>>(imgs.size(), {1.0, 0.0, 0.0, 0.0});
  };
  const auto r = recognition_accuracy(sketches, zeros, always_zero, 4);
  CHECK(r.acc_at_1 == 1.0);
  CHECK(r.k == 2);
  CHECK_THROWS_AS(recognition_accuracy(sketches, std::vector<int>(3, 0), always_zero, 4), DataError);
  CHECK_THROWS_AS(recognition_accuracy(sketches, std::vector<int>(sketches.size(), 4), always_zero, 4), DataError);

  Rng rng(2);
  const Classifier random = [&](const std::vector<RasterImage>& imgs) {
    std::vector<std::vector<double>> s(imgs.size(), std::vector<double>(4));
    for (auto& row : s)
      for (double& v : row) v = rng.uniform();
    return s;
  };
  std::vector<StrokeSequence> many;
  std::vector<int> labels;
  for (int i = 0; i < 4000; ++i) {
    many.push_back(sketches[i % sketches.size()]);
    labels.push_back(i % 4);
  }
  const auto rr = recognition_accuracy(many, labels, random, 4);
  CHECK(std::abs(rr.acc_at_1 - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / 4000));
  CHECK(std::abs(rr.acc_at_k - 0.5) < 4.0 * std::sqrt(0.25 / 4000));
}

TEST_CASE("recognizer learns a separable two-class set") {
  RecognizerConfig cfg;
  cfg.seed = 3;
  const auto [imgs, labels] = bars(64, cfg.image_size, 4);
  const Recognizer r = train_recognizer(imgs, labels, cfg);
  CHECK(top_k_accuracy(r.logits(imgs), labels, 1) >= 0.95);
  const Recognizer again = train_recognizer(imgs, labels, cfg);
  CHECK(same_bits(r.params, again.params));
  CHECK_THROWS_AS(train_recognizer(imgs, std::vector<int>(imgs.size(), 1), cfg), DataError);
  CHECK_THROWS_AS(init_recognizer(1, cfg), DataError);
}

TEST_CASE("untrained recognizer is near chance on a balanced set") {
  const auto pairs = sketch::make_toy_pairs(300, 5, 48);
  std::vector<StrokeSequence> sketches;
  std::vector<int> labels;
  for (const auto& p : pairs) {
    if (p.label >= 3) continue;
    sketches.push_back(p.sketch);
    labels.push_back(p.label);
  }
  double mean = 0;
  const int seeds = 8;
  for (int s = 0; s < seeds; ++s) {
    RecognizerConfig cfg;
    cfg.seed = 100 + s;
    mean += recognition_accuracy(sketches, labels, init_recognizer(3, cfg)).acc_at_1 / seeds;
  }
  MESSAGE("mean untrained accuracy " << mean);
  CHECK(std::abs(mean - 1.0 / 3) < 0.1);
}

TEST_CASE("triplet loss closed forms") {
  const Tensor a = Tensor::from({1, 2}, {0, 0});
  const Tensor p = Tensor::from({1, 2}, {0, 0});
  const Tensor far = Tensor::from({1, 2}, {3, 4});
  CHECK(triplet_loss(a, p, far, 0.2).item() == 0.0);
  const Tensor q = Tensor::from({1, 2}, {1, 1});
  CHECK(triplet_loss(a, q, q, 0.2).item() == doctest::Approx(0.2).epsilon(1e-15));
  // d(a,p) = 5, d(a,n) = 1
  CHECK(triplet_loss(a, far, q, 0.2).item() == doctest::Approx(5.0 - std::sqrt(2.0) + 0.2).epsilon(1e-14));
  CHECK_THROWS_AS(triplet_loss(a, Tensor::zeros({2, 2}), q, 0.2), ShapeError);
}

TEST_CASE("triplet loss gradients") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<Tensor> in;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v(4 * 5);
      for (double& x : v) x = rng.normal();
      in.push_back(Tensor::from({4, 5}, v));
    }
    // margin large enough to keep every hinge clear of its kink
    const double err = core::grad_check([&] { return triplet_loss(in[0], in[1], in[2], 10.0); }, in);
    CHECK(err < 1e-4);
  }
  // zero anchor-positive distance contributes nothing
  Tensor a = Tensor::from({1, 2}, {1, 1}, true), p = Tensor::from({1, 2}, {1, 1}, true);
  Tensor n = Tensor::from({1, 2}, {1, 2}, true);
  core::Tape tape;
  {
    core::TapeScope s(tape);
    tape.backward(triplet_loss(a, p, n, 2.0));
  }
  CHECK(p.grad()[0] == 0.0);
  CHECK(p.grad()[1] == 0.0);
  CHECK(n.grad()[1] == doctest::Approx(-1.0));
}

TEST_CASE("ranking agrees with a brute-force sort") {
  Rng rng(6);
  for (int inst = 0; inst < 50; ++inst) {
    const int g = 1 + static_cast<int>(rng.below(20)), nq = 1 + static_cast<int>(rng.below(10));
    const int dim = 1 + static_cast<int>(rng.below(3));
    auto vec = [&] {
      std::vector<double> v(dim);
      for (double& x : v) x = static_cast<double>(rng.below(4));  // small integers give ties
      return v;
    };
    std::vector<std::vector<double>> qs, gs;
    std::vector<int> truth;
    for (int j = 0; j < g; ++j) gs.push_back(vec());
    for (int q = 0; q < nq; ++q) {
      qs.push_back(vec());
      truth.push_back(static_cast<int>(rng.below(g)));
    }
    const RankingResult r = rank_by_distance(qs, gs, truth);
    std::vector<int> hits(g + 1, 0);
    for (int q = 0; q < nq; ++q) {
      std::vector<double> d(g);
      for (int j = 0; j < g; ++j) {
        double s = 0;
        for (int k = 0; k < dim; ++k) s += (qs[q][k] - gs[j][k]) * (qs[q][k] - gs[j][k]);
        d[j] = std::sqrt(s);
      }
      const auto order = oracle_order(d);
      REQUIRE(r.ranked[q] == order);
      const int pos = static_cast<int>(std::find(order.begin(), order.end(), truth[q]) - order.begin());
      for (int k = pos + 1; k <= g; ++k) hits[k]++;
    }
    double prev = 0;
    for (int k = 1; k <= g; ++k) {
      CHECK(r.acc_at.at(k) == static_cast<double>(hits[k]) / nq);
      CHECK(r.acc_at.at(k) >= prev);
      prev = r.acc_at.at(k);
    }
    CHECK(r.at(g) == 1.0);
  }
  CHECK_THROWS_AS(rank_by_distance({{0.0}}, {{0.0}}, {}), DataError);
  CHECK_THROWS_AS(rank_by_distance({{0.0}}, {{0.0}}, {1}), DataError);
}

TEST_CASE("pixel embedding retrieves each sketch's own raster") {
  const auto pairs = sketch::make_toy_pairs(12, 7, 48);
  std::vector<StrokeSequence> queries;
  std::vector<RasterImage> gallery;
  std::vector<int> truth;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    queries.push_back(pairs[i].sketch);
    gallery.push_back(sketch::rasterize(pairs[i].sketch, 48));
    truth.push_back(static_cast<int>(i));
  }
  const ImageEmbedding pixels = [](const std::vector<RasterImage>& imgs) {
    std::vector<std::vector<double>> out;
    for (const auto& im : imgs) out.push_back(im.data);
    return out;
  };
  const RankingResult r = retrieval_accuracy(queries, gallery, truth, pixels);
  CHECK(r.at(1) == 1.0);
  CHECK_THROWS_AS(retrieval_accuracy(queries, gallery, {0, 1}, pixels), DataError);
}

TEST_CASE("triplet embedder training is deterministic and improves retrieval") {
  EmbedderConfig cfg;
  cfg.steps = 150;
  cfg.seed = 8;
  const auto pairs = sketch::make_toy_pairs(24, 9, 48);
  const Embedder a = train_triplet_embedder(pairs, cfg);
  const Embedder b = train_triplet_embedder(pairs, cfg);
  CHECK(same_bits(a.params, b.params));
  CHECK_THROWS_AS(train_triplet_embedder({pairs[0]}, cfg), DataError);

  std::vector<StrokeSequence> queries;
  std::vector<RasterImage> gallery;
  std::vector<int> truth;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    queries.push_back(pairs[i].sketch);
    gallery.push_back(pairs[i].photo);
    truth.push_back(static_cast<int>(i));
  }
  const double before = retrieval_accuracy(queries, gallery, truth, init_embedder(cfg)).at(5);
  const double after = retrieval_accuracy(queries, gallery, truth, a).at(5);
  MESSAGE("train-set acc@5 " << before << " -> " << after);
  CHECK(after > before);
}

TEST_CASE("augmentation experiment contracts") {
  AugmentationConfig cfg;
  cfg.embedder.seed = 10;
  cfg.pretrain_steps = 20;
  cfg.finetune_steps = 20;
  const auto real = sketch::make_toy_pairs(16, 11, 48, "real");
  const auto synth = sketch::make_toy_pairs(16, 12, 48, "syn");

  const AugmentationReport none = augmentation_experiment(real, {}, cfg);
  CHECK(none.baseline_at_1 == none.augmented_at_1);
  CHECK(none.baseline_at_10 == none.augmented_at_10);
  CHECK(none.eval_queries == 4);

  const AugmentationReport x = augmentation_experiment(real, synth, cfg);
  const AugmentationReport y = augmentation_experiment(real, synth, cfg);
  CHECK(x.to_json() == y.to_json());
  CHECK(x.baseline_at_1 == none.baseline_at_1);

  auto clash = synth;
  clash[0].id = real[3].id;  // index 3 is held out with eval_every 4
  CHECK_THROWS_AS(augmentation_experiment(real, clash, cfg), DataError);
}

TEST_CASE("chamfer distance") {
  using sketch::Vec2;
  CHECK(chamfer_distance(std::vector<Vec2>{{0, 0}}, std::vector<Vec2>{{0, 0}, {3, 4}}) == 1.25);
  const auto pairs = sketch::make_toy_pairs(6, 13, 48);
  for (const auto& p : pairs) CHECK(chamfer_distance(p.sketch, p.sketch) == 0.0);
  CHECK(chamfer_distance(pairs[0].sketch, pairs[1].sketch) == chamfer_distance(pairs[1].sketch, pairs[0].sketch));
  CHECK(chamfer_distance(pairs[0].sketch, pairs[1].sketch) > 0.0);
  const auto pts = sketch_points(StrokeSequence::from_real({{1, 2, 1, 0, 0}, {3, -1, 0, 1, 0}}));
  REQUIRE(pts.size() == 3);
  CHECK(pts[2].x == 4.0);
  CHECK(pts[2].y == 1.0);
  CHECK_THROWS_AS(chamfer_distance(std::vector<Vec2>{}, pts), DataError);
}
