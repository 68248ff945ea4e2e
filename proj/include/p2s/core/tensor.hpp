#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace p2s::core {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::string_view op = "leaf";

  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Shared handle to a dense row-major double tensor. Copies alias the same
/// storage; use detach() for an independent value copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  /// Negative indices count from the back.
  int dim(int i) const;
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  /// Writable view for leaves (optimizer updates, finite differences).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  /// Zeros when nothing has accumulated yet.
  std::vector<double> grad() const;
  std::span<const double> grad_view() const { return node_->grad; }
  void zero_grad();

  std::string_view op() const { return node_->op; }
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of differentiable operations. Backward closures run in
/// reverse recording order, which is a valid reverse topological order.
class Tape {
 public:
  void record(std::string_view op, std::function<void()> backward);

  /// Seeds d(loss)/d(loss) = 1, runs every closure once, then clears the
  /// record. Gradients accumulate into leaves; running backward again
  /// without a new forward pass throws.
  void backward(const Tensor& loss);

  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  struct Record {
    std::string_view op;
    std::function<void()> backward;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

/// Installs a tape as the recording target for the current thread. Ops
/// executed while no tape is installed compute values only.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording for the current thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

namespace detail {

/// True when a tape is installed and any of the inputs requires grad.
bool recording(std::initializer_list<const Tensor*> inputs);

/// Wraps a freshly computed value; throws NumericError naming `op` when any
/// element is not finite.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> value, bool requires_grad);

void check_finite(std::string_view op, std::span<const double> values);

}  // namespace detail

}  // namespace p2s::core
