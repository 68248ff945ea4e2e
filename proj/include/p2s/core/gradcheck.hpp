#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "p2s/core/tensor.hpp"

namespace p2s::core {

struct GradCheckOptions {
  double h = 1e-5;
  /// 0 checks every coordinate; otherwise this many per tensor, drawn from `seed`.
  std::size_t coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Max over checked coordinates of
///   |analytic - central_fd| / max(1, |analytic|, |central_fd|)
/// for scalar-valued f. Inputs are marked as requiring grad; their existing
/// gradients are cleared.
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs, const GradCheckOptions& opts = {});

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5);

}  // namespace p2s::core
