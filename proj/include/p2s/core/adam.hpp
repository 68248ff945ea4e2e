#pragma once

#include <span>
#include <vector>

#include "p2s/core/params.hpp"
#include "p2s/core/tensor.hpp"

namespace p2s::core {

/// Bias-corrected Adam. Defaults are the photo-to-sketch training settings.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  long long t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  /// Stores moments and the step counter as tensors named adam/m/<name>,
  /// adam/v/<name> and adam/t, so they round-trip through ParameterSet files.
  void export_to(ParameterSet& out, const ParameterSet& params) const;
  static AdamState import_from(const ParameterSet& in, const ParameterSet& params, AdamState hyper);
};

/// One update using explicit gradients; grads[i] must match params[i] in size.
void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state);

/// One update using the gradients accumulated in each parameter.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace p2s::core
