#pragma once

#include <cstdint>

#include "p2s/core/params.hpp"
#include "p2s/model/config.hpp"
#include "p2s/rng.hpp"

namespace p2s::model {

/// Fresh weights for all four subnets. Recurrent kernels get an orthogonal
/// matrix per gate, conv/FC kernels uniform(+-sqrt(k / fan_in)) with k = 6
/// before a ReLU and k = 3 otherwise, biases zero except LSTM forget gates
/// (one) and instance-norm scales (one).
core::ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Rows x cols matrix with orthonormal columns (rows >= cols) or rows
/// (rows < cols), from Gram-Schmidt on Gaussian draws.
std::vector<double> orthogonal(int rows, int cols, Rng& rng);

/// Names of the parameters belonging to one subnet ("ep", "es", "dp", "ds").
std::vector<std::string> subnet_names(const core::ParameterSet& params, const std::string& prefix);

}  // namespace p2s::model
