#include "p2s/core/ops.hpp"

#include <algorithm>
#include <cmath>

#include "p2s/errors.hpp"
#include "p2s/kernels/kernels.hpp"

namespace p2s::core {

using detail::make_result;
using detail::recording;
using kernels::Trans;

namespace {

using NodePtr = std::shared_ptr<Node>;

void record(std::string_view op, std::function<void()> fn) { active_tape()->record(op, std::move(fn)); }

[[noreturn]] void shape_mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

// Number of times b repeats inside a under leading-batch broadcasting.
std::size_t broadcast_outer(std::string_view op, const Tensor& a, const Tensor& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (bs.size() > as.size()) shape_mismatch(op, a, b);
  if (!std::equal(bs.begin(), bs.end(), as.end() - static_cast<std::ptrdiff_t>(bs.size()))) {
    shape_mismatch(op, a, b);
  }
  return a.size() / b.size();
}

// Accumulates g (length outer * inner) into dst (length inner), summing over outer.
void reduce_into(std::span<double> dst, std::span<const double> g, std::size_t outer) {
  const auto& k = kernels::active();
  const std::size_t inner = dst.size();
  for (std::size_t o = 0; o < outer; ++o) k.axpy(inner, 1.0, g.data() + o * inner, dst.data());
}

template <class Fwd, class Deriv>
Tensor unary(std::string_view op, const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> v(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fwd(av[i]);
  const bool rg = recording({&a});
  Tensor out = make_result(op, a.shape(), std::move(v), rg);
  if (rg) {
    record(op, [an = a.ptr(), on = out.ptr(), deriv] {
      if (on->grad.empty()) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += on->grad[i] * deriv(an->value[i], on->value[i]);
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_mismatch("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> v(m * n);
  kernels::active().gemm(Trans::No, Trans::No, m, n, k, 1.0, a.data().data(), k, b.data().data(), n, 0.0,
                         v.data(), n);
  const bool rg = recording({&a, &b});
  Tensor out = make_result("matmul", {static_cast<int>(m), static_cast<int>(n)}, std::move(v), rg);
  if (rg) {
    record("matmul", [an = a.ptr(), bn = b.ptr(), on = out.ptr(), m, n, k] {
      if (on->grad.empty()) return;
      const auto& kt = kernels::active();
      if (an->requires_grad)
        kt.gemm(Trans::No, Trans::Yes, m, k, n, 1.0, on->grad.data(), n, bn->value.data(), n, 1.0,
                an->grad_buffer().data(), k);
      if (bn->requires_grad)
        kt.gemm(Trans::Yes, Trans::No, k, n, m, 1.0, an->value.data(), k, on->grad.data(), n, 1.0,
                bn->grad_buffer().data(), n);
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const std::size_t outer = broadcast_outer("add", a, b);
  const std::size_t inner = b.size();
  std::vector<double> v(a.size());
  const auto& kt = kernels::active();
  for (std::size_t o = 0; o < outer; ++o)
    kt.add(inner, a.data().data() + o * inner, b.data().data(), v.data() + o * inner);
  const bool rg = recording({&a, &b});
  Tensor out = make_result("add", a.shape(), std::move(v), rg);
  if (rg) {
    record("add", [an = a.ptr(), bn = b.ptr(), on = out.ptr(), outer] {
      if (on->grad.empty()) return;
      if (an->requires_grad) kernels::active().axpy(on->grad.size(), 1.0, on->grad.data(), an->grad_buffer().data());
      if (bn->requires_grad) reduce_into(bn->grad_buffer(), on->grad, outer);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const std::size_t outer = broadcast_outer("sub", a, b);
  const std::size_t inner = b.size();
  std::vector<double> v(a.size());
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) v[o * inner + i] = av[o * inner + i] - bv[i];
  const bool rg = recording({&a, &b});
  Tensor out = make_result("sub", a.shape(), std::move(v), rg);
  if (rg) {
    record("sub", [an = a.ptr(), bn = b.ptr(), on = out.ptr(), outer] {
      if (on->grad.empty()) return;
      const auto& kt = kernels::active();
      if (an->requires_grad) kt.axpy(on->grad.size(), 1.0, on->grad.data(), an->grad_buffer().data());
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o) kt.axpy(gb.size(), -1.0, on->grad.data() + o * gb.size(), gb.data());
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const std::size_t outer = broadcast_outer("mul", a, b);
  const std::size_t inner = b.size();
  std::vector<double> v(a.size());
  const auto& kt = kernels::active();
  for (std::size_t o = 0; o < outer; ++o)
    kt.mul(inner, a.data().data() + o * inner, b.data().data(), v.data() + o * inner);
  const bool rg = recording({&a, &b});
  Tensor out = make_result("mul", a.shape(), std::move(v), rg);
  if (rg) {
    record("mul", [an = a.ptr(), bn = b.ptr(), on = out.ptr(), outer, inner] {
      if (on->grad.empty()) return;
      const auto& g = on->grad;
      if (an->requires_grad) {
        auto ga = an->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < inner; ++i) ga[o * inner + i] += g[o * inner + i] * bn->value[i];
      }
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i] * an->value[o * inner + i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor tanh(const Tensor& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor softmax(const Tensor& a) {
  const std::size_t n = static_cast<std::size_t>(a.dim(-1));
  const std::size_t rows = a.size() / n;
  std::vector<double> v(a.size());
  const auto av = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * n;
    double* y = v.data() + r * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += (y[i] = std::exp(x[i] - mx));
    for (std::size_t i = 0; i < n; ++i) y[i] /= z;
  }
  const bool rg = recording({&a});
  Tensor out = make_result("softmax", a.shape(), std::move(v), rg);
  if (rg) {
    record("softmax", [an = a.ptr(), on = out.ptr(), n, rows] {
      if (on->grad.empty()) return;
      auto ga = an->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = on->value.data() + r * n;
        const double* g = on->grad.data() + r * n;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < n; ++i) ga[r * n + i] += y[i] * (g[i] - dot);
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  const double s = kernels::active().sum(a.size(), a.data().data());
  const bool rg = recording({&a});
  Tensor out = make_result("sum", {1}, {s}, rg);
  if (rg) {
    record("sum", [an = a.ptr(), on = out.ptr()] {
      if (on->grad.empty()) return;
      const double g = on->grad[0];
      for (double& x : an->grad_buffer()) x += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  const bool rg = recording({&a});
  Tensor out = make_result("reshape", std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), rg);
  if (rg) {
    record("reshape", [an = a.ptr(), on = out.ptr()] {
      if (on->grad.empty()) return;
      kernels::active().axpy(on->grad.size(), 1.0, on->grad.data(), an->grad_buffer().data());
    });
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) shape_mismatch("concat_cols", a, b);
  const std::size_t m = a.dim(0), na = a.dim(1), nb = b.dim(1), n = na + nb;
  std::vector<double> v(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * na, na, v.data() + i * n);
    std::copy_n(b.data().data() + i * nb, nb, v.data() + i * n + na);
  }
  const bool rg = recording({&a, &b});
  Tensor out = make_result("concat_cols", {static_cast<int>(m), static_cast<int>(n)}, std::move(v), rg);
  if (rg) {
    record("concat_cols", [an = a.ptr(), bn = b.ptr(), on = out.ptr(), m, na, nb, n] {
      if (on->grad.empty()) return;
      const auto& kt = kernels::active();
      for (std::size_t i = 0; i < m; ++i) {
        if (an->requires_grad) kt.axpy(na, 1.0, on->grad.data() + i * n, an->grad_buffer().data() + i * na);
        if (bn->requires_grad) kt.axpy(nb, 1.0, on->grad.data() + i * n + na, bn->grad_buffer().data() + i * nb);
      }
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int begin, int count) {
  if (a.rank() != 2 || begin < 0 || count <= 0 || begin + count > a.dim(1)) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of range for " + shape_str(a.shape()));
  }
  const std::size_t m = a.dim(0), n = a.dim(1), c = count, off = begin;
  std::vector<double> v(m * c);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(a.data().data() + i * n + off, c, v.data() + i * c);
  const bool rg = recording({&a});
  Tensor out = make_result("slice_cols", {static_cast<int>(m), count}, std::move(v), rg);
  if (rg) {
    record("slice_cols", [an = a.ptr(), on = out.ptr(), m, n, c, off] {
      if (on->grad.empty()) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) kernels::active().axpy(c, 1.0, on->grad.data() + i * c, ga.data() + i * n + off);
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int begin, int count) {
  if (a.rank() < 1 || begin < 0 || count <= 0 || begin + count > a.dim(0)) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of range for " + shape_str(a.shape()));
  }
  const std::size_t row = a.size() / static_cast<std::size_t>(a.dim(0));
  const std::size_t off = row * static_cast<std::size_t>(begin);
  Shape shape = a.shape();
  shape[0] = count;
  std::vector<double> v(a.data().begin() + static_cast<std::ptrdiff_t>(off),
                        a.data().begin() + static_cast<std::ptrdiff_t>(off + row * count));
  const bool rg = recording({&a});
  Tensor out = make_result("slice_rows", std::move(shape), std::move(v), rg);
  if (rg) {
    record("slice_rows", [an = a.ptr(), on = out.ptr(), off] {
      if (on->grad.empty()) return;
      kernels::active().axpy(on->grad.size(), 1.0, on->grad.data(), an->grad_buffer().data() + off);
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Shape shape = parts.front().shape();
  int rows = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.rank() != static_cast<int>(shape.size()) || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      shape_mismatch("concat_rows", parts.front(), p);
    }
    rows += p.dim(0);
    rg = rg || recording({&p});
  }
  shape[0] = rows;
  std::vector<double> v;
  v.reserve(numel(shape));
  for (const Tensor& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
  Tensor out = make_result("concat_rows", std::move(shape), std::move(v), rg);
  if (rg) {
    std::vector<NodePtr> nodes;
    nodes.reserve(parts.size());
    for (const Tensor& p : parts) nodes.push_back(p.ptr());
    record("concat_rows", [nodes = std::move(nodes), on = out.ptr()] {
      if (on->grad.empty()) return;
      std::size_t off = 0;
      for (const NodePtr& p : nodes) {
        if (p->requires_grad) kernels::active().axpy(p->value.size(), 1.0, on->grad.data() + off, p->grad_buffer().data());
        off += p->value.size();
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

}  // namespace p2s::core
