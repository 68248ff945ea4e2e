#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace p2s::cli {

/// One named finite-difference check. run(seed) builds random inputs from
/// the seed and returns the max relative error over all checked coordinates.
struct GradCase {
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

/// Every differentiable op, the model blocks, and the composite losses on
/// 2-pair micro-batches of the tiny model.
const std::vector<GradCase>& grad_suite();

struct GradResult {
  std::string name;
  double max_error = 0;  // over all seeds
};

/// Runs the cases whose name equals `only` (all when empty) for seeds
/// 0..seeds-1. Throws DataError when `only` matches nothing.
std::vector<GradResult> run_grad_suite(const std::string& only = {}, int seeds = 10);

}  // namespace p2s::cli
