#pragma once

// Differentiable tensor primitives. Broadcasting is limited to repeating the
// second operand over leading dimensions: b.shape must equal a.shape or a
// trailing suffix of it. Anything else is a ShapeError naming both shapes.

#include <vector>

#include "p2s/core/tensor.hpp"

namespace p2s::core {

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);

/// Softmax over the last axis.
Tensor softmax(const Tensor& a);

/// Sum / mean of all elements, shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);

/// Rank-2 helpers.
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int begin, int count);
/// Slices along the first axis; works for any rank.
Tensor slice_rows(const Tensor& a, int begin, int count);
/// Concatenates along the first axis; trailing shapes must agree.
Tensor concat_rows(const std::vector<Tensor>& parts);

/// x * W + b for x [m,k], W [k,n], b [n].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace p2s::core
