#include "p2s/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "p2s/rng.hpp"

namespace p2s::core {

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs, const GradCheckOptions& opts) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(f());
  }
  Rng rng(opts.seed);
  double worst = 0.0;
  NoGradScope no_grad;
  for (Tensor& t : inputs) {
    const std::vector<double> analytic = t.grad();
    std::vector<std::size_t> coords(t.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opts.coords_per_tensor > 0 && opts.coords_per_tensor < coords.size()) {
      for (std::size_t i = 0; i < opts.coords_per_tensor; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(opts.coords_per_tensor);
    }
    auto x = t.mutable_data();
    for (std::size_t j : coords) {
      const double saved = x[j];
      x[j] = saved + opts.h;
      const double fp = f().item();
      x[j] = saved - opts.h;
      const double fm = f().item();
      x[j] = saved;
      const double fd = (fp - fm) / (2.0 * opts.h);
      const double a = analytic[j];
      const double denom = std::max({1.0, std::abs(a), std::abs(fd)});
      worst = std::max(worst, std::abs(a - fd) / denom);
    }
  }
  return worst;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
  Tensor inputs[] = {x};
  GradCheckOptions opts;
  opts.h = h;
  return grad_check([&] { return f(x); }, inputs, opts);
}

}  // namespace p2s::core
