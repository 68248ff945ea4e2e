#include "p2s/model/batch.hpp"

#include <algorithm>

#include "p2s/errors.hpp"

namespace p2s::model {

using core::Tensor;
using sketch::Point5;

Tensor photos_tensor(const std::vector<const sketch::RasterImage*>& photos) {
  if (photos.empty()) throw ShapeError("photos_tensor: empty batch");
  const auto& first = *photos.front();
  const int b = static_cast<int>(photos.size()), c = first.channels, h = first.height, w = first.width;
  std::vector<double> v(static_cast<std::size_t>(b) * c * h * w);
  for (int i = 0; i < b; ++i) {
    const auto& img = *photos[i];
    if (img.channels != c || img.height != h || img.width != w) {
      throw ShapeError("photos_tensor: images of different sizes in one batch");
    }
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) v[((static_cast<std::size_t>(i) * c + ch) * h + r) * w + col] = img.at(r, col, ch);
  }
  return Tensor::from({b, c, h, w}, std::move(v));
}

namespace {

Tensor stack(const std::vector<const sketch::StrokeSequence*>& seqs, bool shift) {
  if (seqs.empty()) throw ShapeError("sequence batch is empty");
  const int t = seqs.front()->n_max(), b = static_cast<int>(seqs.size());
  std::vector<double> v(static_cast<std::size_t>(t) * b * 5);
  for (int j = 0; j < b; ++j) {
    if (seqs[j]->n_max() != t) {
      throw ShapeError("sequence batch mixes lengths " + std::to_string(t) + " and " + std::to_string(seqs[j]->n_max()));
    }
    for (int i = 0; i < t; ++i) {
      const Point5 p = shift ? (i == 0 ? Point5::start_token() : seqs[j]->points[i - 1]) : seqs[j]->points[i];
      double* out = v.data() + (static_cast<std::size_t>(i) * b + j) * 5;
      out[0] = p.dx;
      out[1] = p.dy;
      out[2] = p.p1;
      out[3] = p.p2;
      out[4] = p.p3;
    }
  }
  return Tensor::from({t, b, 5}, std::move(v));
}

}  // namespace

Tensor sequence_tensor(const std::vector<const sketch::StrokeSequence*>& seqs) { return stack(seqs, false); }

Tensor teacher_inputs(const std::vector<const sketch::StrokeSequence*>& seqs) { return stack(seqs, true); }

sketch::RasterImage to_image(const Tensor& photos, int b) {
  if (photos.rank() != 4 || b < 0 || b >= photos.dim(0)) throw ShapeError("to_image: bad photo tensor or index");
  const int c = photos.dim(1), h = photos.dim(2), w = photos.dim(3);
  sketch::RasterImage img = sketch::RasterImage::blank(h, w, c);
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col)
        img.at(r, col, ch) = std::clamp(photos.at(((static_cast<std::size_t>(b) * c + ch) * h + r) * w + col), 0.0, 1.0);
  return img;
}

}  // namespace p2s::model
