#pragma once

#include <vector>

#include "p2s/core/tensor.hpp"

namespace p2s::core {

/// Mean over all elements of (pred - target)^2. Gradients flow to both sides.
Tensor mse(const Tensor& pred, const Tensor& target);

/// Mean over rows of -log softmax(logits)[label]. logits [B, K].
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace p2s::core
