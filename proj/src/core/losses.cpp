#include "p2s/core/losses.hpp"

#include <algorithm>
#include <cmath>

#include "p2s/errors.hpp"

namespace p2s::core {

Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse: shapes " + shape_str(pred.shape()) + " and " + shape_str(target.shape()) + " differ");
  }
  const auto p = pred.data();
  const auto t = target.data();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  const double inv_n = 1.0 / static_cast<double>(p.size());
  const bool rg = detail::recording({&pred, &target});
  Tensor out = detail::make_result("mse", {1}, {s * inv_n}, rg);
  if (rg) {
    active_tape()->record("mse", [pn = pred.ptr(), tn = target.ptr(), on = out.ptr(), inv_n] {
      if (on->grad.empty()) return;
      const double g = 2.0 * on->grad[0] * inv_n;
      std::span<double> gp = pn->requires_grad ? pn->grad_buffer() : std::span<double>{};
      std::span<double> gt = tn->requires_grad ? tn->grad_buffer() : std::span<double>{};
      for (std::size_t i = 0; i < pn->value.size(); ++i) {
        const double d = g * (pn->value[i] - tn->value[i]);
        if (!gp.empty()) gp[i] += d;
        if (!gt.empty()) gt[i] -= d;
      }
    });
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size()) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_str(logits.shape()) + " with " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<double> probs(rows * k);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(labels[r]) + " outside [0, " +
                      std::to_string(k) + ")");
    }
    const double* x = logits.data().data() + r * k;
    const double mx = *std::max_element(x, x + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(x[j] - lse);
    loss += lse - x[labels[r]];
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const bool rg = detail::recording({&logits});
  Tensor out = detail::make_result("softmax_cross_entropy", {1}, {loss * inv_rows}, rg);
  if (rg) {
    active_tape()->record("softmax_cross_entropy", [ln = logits.ptr(), on = out.ptr(), probs = std::move(probs),
                                                    labels, rows, k, inv_rows] {
      if (on->grad.empty()) return;
      const double g = on->grad[0] * inv_rows;
      auto gl = ln->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < k; ++j)
          gl[r * k + j] += g * (probs[r * k + j] - (static_cast<int>(j) == labels[r] ? 1.0 : 0.0));
    });
  }
  return out;
}

}  // namespace p2s::core
