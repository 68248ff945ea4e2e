#include "p2s/core/tensor.hpp"

#include <cmath>
#include <sstream>

#include "p2s/errors.hpp"

namespace p2s::core {

namespace {
thread_local Tape* g_active = nullptr;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("shape " + shape_str(shape) + " has a non-positive dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  const std::size_t n = numel(shape);
  return from(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

int Tensor::dim(int i) const {
  const int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw ShapeError("dimension index out of range for " + shape_str(shape()));
  return node_->shape[static_cast<std::size_t>(i)];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  return *this;
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

void Tape::record(std::string_view op, std::function<void()> backward) {
  consumed_ = false;
  records_.push_back({op, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (consumed_) throw std::logic_error("backward already ran on this tape; run a new forward pass first");
  if (!loss.requires_grad()) throw std::logic_error("loss does not depend on any tensor requiring grad");
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
  records_.clear();
  consumed_ = true;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

NoGradScope::NoGradScope() : previous_(g_active) { g_active = nullptr; }
NoGradScope::~NoGradScope() { g_active = previous_; }

Tape* active_tape() { return g_active; }

namespace detail {

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (g_active == nullptr) return false;
  for (const Tensor* t : inputs)
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  return false;
}

void check_finite(std::string_view op, std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op), "non-finite value produced by op '" + std::string(op) + "'");
    }
  }
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> value, bool requires_grad) {
  check_finite(op, value);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->op = op;
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace p2s::core
