#include "p2s/model/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "p2s/errors.hpp"

namespace p2s::model {

using core::Tensor;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
// 1 - rho^2 is kept at or above this so that a saturated tanh stays finite.
constexpr double kMinOneMinusRho2 = 1e-15;

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Offset NLL of one raw head row; adds g * d(nll)/d(row) into grad when given.
double row_offset_nll(const double* row, int m, double dx, double dy, double g, double* grad, std::vector<double>& s) {
  s.resize(2 * m);
  double* log_pi = s.data();
  double* joint = s.data() + m;
  const double lse_logits = log_sum_exp({row, static_cast<std::size_t>(m)});
  for (int j = 0; j < m; ++j) log_pi[j] = row[j] - lse_logits;
  for (int j = 0; j < m; ++j) {
    const double a = row[3 * m + j], b = row[4 * m + j], rho = std::tanh(row[5 * m + j]);
    const double d = std::max(1.0 - rho * rho, kMinOneMinusRho2);
    const double zx = (dx - row[m + j]) * std::exp(-a), zy = (dy - row[2 * m + j]) * std::exp(-b);
    const double z2 = zx * zx + zy * zy - 2.0 * rho * zx * zy;
    joint[j] = log_pi[j] - kLog2Pi - a - b - 0.5 * std::log(d) - z2 / (2.0 * d);
  }
  const double total = log_sum_exp({joint, static_cast<std::size_t>(m)});
  if (grad) {
    for (int j = 0; j < m; ++j) {
      const double gamma = std::exp(joint[j] - total);
      const double a = row[3 * m + j], b = row[4 * m + j], rho = std::tanh(row[5 * m + j]);
      const double d = std::max(1.0 - rho * rho, kMinOneMinusRho2);
      const double sx = std::exp(a), sy = std::exp(b);
      const double zx = (dx - row[m + j]) / sx, zy = (dy - row[2 * m + j]) / sy;
      const double z2 = zx * zx + zy * zy - 2.0 * rho * zx * zy;
      const double gg = g * gamma;
      grad[j] += g * (std::exp(log_pi[j]) - gamma);
      grad[m + j] -= gg * (zx - rho * zy) / (sx * d);
      grad[2 * m + j] -= gg * (zy - rho * zx) / (sy * d);
      grad[3 * m + j] -= gg * (-1.0 + (zx * zx - rho * zx * zy) / d);
      grad[4 * m + j] -= gg * (-1.0 + (zy * zy - rho * zx * zy) / d);
      grad[5 * m + j] -= gg * (rho + zx * zy - rho * z2 / d);
    }
  }
  return -total;
}

double row_pen_ce(const double* q, int pen, double g, double* grad) {
  const double lse = log_sum_exp({q, 3});
  if (grad)
    for (int k = 0; k < 3; ++k) grad[k] += g * (std::exp(q[k] - lse) - (k == pen ? 1.0 : 0.0));
  return lse - q[pen];
}

}  // namespace

GmmParams gmm_from_row(std::span<const double> row, int m) {
  if (static_cast<int>(row.size()) != 6 * m + 3) {
    throw ShapeError("gmm_from_row: row of " + std::to_string(row.size()) + " values for " + std::to_string(m) +
                     " mixtures");
  }
  GmmParams g;
  const double lse = log_sum_exp(row.subspan(0, m));
  for (int j = 0; j < m; ++j) {
    g.pi.push_back(std::exp(row[j] - lse));
    g.mu_x.push_back(row[m + j]);
    g.mu_y.push_back(row[2 * m + j]);
    g.sigma_x.push_back(std::exp(row[3 * m + j]));
    g.sigma_y.push_back(std::exp(row[4 * m + j]));
    g.rho.push_back(std::tanh(row[5 * m + j]));
  }
  for (int k = 0; k < 3; ++k) g.q[k] = row[6 * m + k];
  return g;
}

std::string check_gmm(const GmmParams& g) {
  const std::size_t m = g.pi.size();
  if (m == 0) return "no mixture components";
  if (g.mu_x.size() != m || g.mu_y.size() != m || g.sigma_x.size() != m || g.sigma_y.size() != m || g.rho.size() != m) {
    return "component arrays differ in length";
  }
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!(g.pi[j] >= 0.0)) return "negative mixture weight";
    total += g.pi[j];
    if (!(g.sigma_x[j] > 0.0) || !(g.sigma_y[j] > 0.0)) return "non-positive scale";
    if (!(std::abs(g.rho[j]) < 1.0)) return "correlation outside (-1, 1)";
    if (!std::isfinite(g.mu_x[j]) || !std::isfinite(g.mu_y[j])) return "non-finite mean";
  }
  if (std::abs(total - 1.0) > 1e-9) return "mixture weights do not sum to 1";
  for (double q : g.q)
    if (!std::isfinite(q)) return "non-finite pen logit";
  return {};
}

double log_bivariate(double dx, double dy, double mu_x, double mu_y, double sigma_x, double sigma_y, double rho) {
  const double d = 1.0 - rho * rho;
  const double zx = (dx - mu_x) / sigma_x, zy = (dy - mu_y) / sigma_y;
  const double z2 = zx * zx + zy * zy - 2.0 * rho * zx * zy;
  return -kLog2Pi - std::log(sigma_x) - std::log(sigma_y) - 0.5 * std::log(d) - z2 / (2.0 * d);
}

double gmm_nll(const GmmParams& g, double dx, double dy) {
  if (auto why = check_gmm(g); !why.empty()) throw DataError("gmm_nll: " + why);
  std::vector<double> terms;
  for (int j = 0; j < g.mixtures(); ++j) {
    if (g.pi[j] == 0.0) continue;
    terms.push_back(std::log(g.pi[j]) + log_bivariate(dx, dy, g.mu_x[j], g.mu_y[j], g.sigma_x[j], g.sigma_y[j], g.rho[j]));
  }
  return -log_sum_exp(terms);
}

double pen_ce(std::span<const double> q, std::span<const int> p) {
  if (q.size() != 3 || p.size() != 3) throw DataError("pen_ce: expected 3 logits and a 3-way one-hot");
  int pen = -1, ones = 0;
  for (int k = 0; k < 3; ++k) {
    if (p[k] != 0 && p[k] != 1) throw DataError("pen_ce: pen state is not one-hot");
    if (p[k] == 1) {
      pen = k;
      ++ones;
    }
  }
  if (ones != 1) throw DataError("pen_ce: pen state is not one-hot");
  return row_pen_ce(q.data(), pen, 0.0, nullptr);
}

Tensor rnn_loss(const Tensor& head, const std::vector<const sketch::StrokeSequence*>& targets, int m) {
  const int width = 6 * m + 3;
  const int batch = static_cast<int>(targets.size());
  if (batch == 0) throw ShapeError("rnn_loss: empty batch");
  const int steps = targets.front()->n_max();
  if (head.rank() != 2 || head.dim(1) != width || head.dim(0) != steps * batch) {
    throw ShapeError("rnn_loss: head " + core::shape_str(head.shape()) + " does not match " + std::to_string(batch) +
                     " targets of length " + std::to_string(steps) + " with " + std::to_string(m) + " mixtures");
  }
  for (const auto* t : targets) {
    if (t->n_max() != steps) throw ShapeError("rnn_loss: targets have different lengths");
    sketch::require_valid(*t);
  }
  const bool rg = core::detail::recording({&head});
  const double norm = 1.0 / (static_cast<double>(steps) * batch);
  std::vector<double> grad(rg ? head.size() : 0, 0.0);
  std::vector<double> scratch;
  double loss = 0.0;
  const double* h = head.data().data();
  for (int t = 0; t < steps; ++t) {
    for (int b = 0; b < batch; ++b) {
      const std::size_t row = static_cast<std::size_t>(t) * batch + b;
      const double* r = h + row * width;
      double* gr = rg ? grad.data() + row * width : nullptr;
      const sketch::Point5& p = targets[b]->points[t];
      if (t < targets[b]->n_s) loss += row_offset_nll(r, m, p.dx, p.dy, norm, gr, scratch);
      loss += row_pen_ce(r + 6 * m, p.pen(), norm, gr ? gr + 6 * m : nullptr);
    }
  }
  Tensor out = core::detail::make_result("rnn_loss", {1}, {loss * norm}, rg);
  if (rg) {
    core::active_tape()->record("rnn_loss", [hn = head.ptr(), on = out.ptr(), grad = std::move(grad)] {
      if (on->grad.empty()) return;
      const double g = on->grad[0];
      auto gh = hn->grad_buffer();
      for (std::size_t i = 0; i < grad.size(); ++i) gh[i] += g * grad[i];
    });
  }
  return out;
}

}  // namespace p2s::model
