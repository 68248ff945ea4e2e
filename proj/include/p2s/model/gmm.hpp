#pragma once

// Mixture density head of the sketch decoder. A head row of width 6M + 3 is
// laid out as
//   [pi logits (M) | mu_x (M) | mu_y (M) | log sigma_x (M) | log sigma_y (M) | rho raw (M) | pen logits (3)]
// with pi = softmax(logits), sigma = exp(.), rho = tanh(.).

#include <array>
#include <span>
#include <vector>

#include "p2s/core/tensor.hpp"
#include "p2s/sketch/stroke.hpp"

namespace p2s::model {

struct GmmParams {
  std::vector<double> pi, mu_x, mu_y, sigma_x, sigma_y, rho;
  std::array<double, 3> q{};  // pen logits

  int mixtures() const { return static_cast<int>(pi.size()); }
};

/// Converts one raw head row.
GmmParams gmm_from_row(std::span<const double> row, int mixtures);

/// Empty string when pi is on the simplex (1e-9), sigmas positive and |rho| < 1.
std::string check_gmm(const GmmParams& g);

/// log N(dx, dy | component j) for the standard bivariate normal density.
double log_bivariate(double dx, double dy, double mu_x, double mu_y, double sigma_x, double sigma_y, double rho);

/// -log sum_j pi_j N(dx, dy | j), via log-sum-exp. Components with pi_j = 0
/// are skipped. Throws DataError for invalid parameters.
double gmm_nll(const GmmParams& g, double dx, double dy);

/// -sum_k p_k log softmax(q)_k for a one-hot p. Throws DataError otherwise.
double pen_ce(std::span<const double> q_logits, std::span<const int> pen_onehot);

/// Sequence reconstruction loss on a head [T * B, 6M + 3] (row t * B + b)
/// against B targets padded to T:
///   mean_b (1 / T) [ sum_{t < n_s} gmm_nll_t + sum_{t < T} pen_ce_t ]
/// Fused op with analytic gradients w.r.t. the raw head.
core::Tensor rnn_loss(const core::Tensor& head, const std::vector<const sketch::StrokeSequence*>& targets,
                      int mixtures);

}  // namespace p2s::model
