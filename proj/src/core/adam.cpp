#include "p2s/core/adam.hpp"

#include <cmath>

#include "p2s/errors.hpp"

namespace p2s::core {

void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state) {
  if (grads.size() != params.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state tracks a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size() || state.m[i].size() != params[i].size()) {
      throw ShapeError("adam_step: size mismatch for parameter " + std::to_string(i) + " of shape " +
                       shape_str(params[i].shape()));
    }
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(p.grad());
  adam_step(params, grads, state);
}

void AdamState::export_to(ParameterSet& out, const ParameterSet& params) const {
  out.add("adam/t", Tensor::scalar(static_cast<double>(t)));
  if (m.empty()) return;
  std::size_t i = 0;
  for (const auto& [name, p] : params.entries()) {
    out.add("adam/m/" + name, Tensor::from(p.shape(), m[i]));
    out.add("adam/v/" + name, Tensor::from(p.shape(), v[i]));
    ++i;
  }
}

AdamState AdamState::import_from(const ParameterSet& in, const ParameterSet& params, AdamState hyper) {
  hyper.m.clear();
  hyper.v.clear();
  hyper.t = in.contains("adam/t") ? static_cast<long long>(in.at("adam/t").item()) : 0;
  for (const auto& [name, p] : params.entries()) {
    const std::string mk = "adam/m/" + name;
    if (!in.contains(mk)) {
      hyper.m.clear();
      hyper.v.clear();
      break;
    }
    const Tensor& mt = in.at(mk);
    const Tensor& vt = in.at("adam/v/" + name);
    if (mt.shape() != p.shape() || vt.shape() != p.shape()) throw ShapeError("adam state shape mismatch for " + name);
    hyper.m.emplace_back(mt.data().begin(), mt.data().end());
    hyper.v.emplace_back(vt.data().begin(), vt.data().end());
  }
  return hyper;
}

}  // namespace p2s::core
