#include "p2s/eval/cnn.hpp"

#include <cmath>

#include "p2s/core/layers.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"

namespace p2s::eval {

using core::Tensor;

namespace {

Tensor uniform(Rng& rng, core::Shape shape, double limit) {
  std::vector<double> v(core::numel(shape));
  for (double& x : v) x = rng.uniform(-limit, limit);
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace

void SmallCnn::init(core::ParameterSet& p, Rng& rng) const {
  if (out_dim <= 0) throw ShapeError("SmallCnn: out_dim must be positive");
  int in = 1, side = image_size;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::string name = prefix + "/conv" + std::to_string(i);
    p.add(name + "/w", uniform(rng, {channels[i], in, 3, 3}, std::sqrt(6.0 / (in * 9))));
    p.add(name + "/b", Tensor::zeros({channels[i]}));
    in = channels[i];
    side = core::conv_out_size(side, 3, 2, 1);
  }
  const int flat = in * side * side;
  p.add(prefix + "/fc/w", uniform(rng, {flat, out_dim}, std::sqrt(3.0 / flat)));
  p.add(prefix + "/fc/b", Tensor::zeros({out_dim}));
}

Tensor SmallCnn::forward(const core::ParameterSet& p, const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != image_size || images.dim(3) != image_size) {
    throw ShapeError("SmallCnn: images " + core::shape_str(images.shape()) + ", expected [B,1," +
                     std::to_string(image_size) + "," + std::to_string(image_size) + "]");
  }
  Tensor x = images;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::string name = prefix + "/conv" + std::to_string(i);
    x = core::relu(core::conv2d(x, p.at(name + "/w"), p.at(name + "/b"), 2, 1));
  }
  x = core::reshape(x, {x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)});
  return core::linear(x, p.at(prefix + "/fc/w"), p.at(prefix + "/fc/b"));
}

Tensor gray_batch(const std::vector<const sketch::RasterImage*>& images, int side) {
  if (images.empty()) throw DataError("gray_batch: no images");
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  std::vector<double> v(images.size() * plane);
  for (std::size_t b = 0; b < images.size(); ++b) {
    sketch::RasterImage img = *images[b];
    if (img.channels != 1) img = sketch::to_grayscale(img);
    if (img.height != side || img.width != side) img = sketch::resize(img, side, side);
    std::copy(img.data.begin(), img.data.end(), v.begin() + b * plane);
  }
  return Tensor::from({static_cast<int>(images.size()), 1, side, side}, std::move(v));
}

}  // namespace p2s::eval
