#include "p2s/core/layers.hpp"

#include <cmath>

#include "p2s/core/ops.hpp"
#include "p2s/errors.hpp"
#include "p2s/kernels/kernels.hpp"

namespace p2s::core {

using detail::make_result;
using detail::recording;
using kernels::Trans;

namespace {

struct Geometry {
  std::size_t channels, in_h, in_w, k, stride, pad, out_h, out_w;
  std::size_t col_rows() const { return channels * k * k; }
  std::size_t col_cols() const { return out_h * out_w; }
};

// col[(c,ky,kx), (oy,ox)] = img[c, oy*s - p + ky, ox*s - p + kx], zero outside.
void im2col(const double* img, const Geometry& g, double* col) {
  const std::size_t cols = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = col + ((c * g.k + ky) * g.k + kx) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.in_h) && ix < static_cast<long>(g.in_w);
            row[oy * g.out_w + ox] = inside ? img[(c * g.in_h + iy) * g.in_w + ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into the image.
void col2im(const double* col, const Geometry& g, double* img) {
  const std::size_t cols = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = col + ((c * g.k + ky) * g.k + kx) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
            img[(c * g.in_h + iy) * g.in_w + ix] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

void check_kernel(std::string_view op, const Tensor& input, const Tensor& kernel, std::size_t in_channel_axis) {
  if (input.rank() != 4 || kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3) ||
      kernel.dim(static_cast<int>(in_channel_axis)) != input.dim(1)) {
    throw ShapeError(std::string(op) + ": incompatible input " + shape_str(input.shape()) + " and kernel " +
                     shape_str(kernel.shape()));
  }
}

void check_bias(std::string_view op, const Tensor& bias, int channels) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != channels)) {
    throw ShapeError(std::string(op) + ": bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(channels) + " output channels");
  }
}

void add_bias(std::vector<double>& v, const Tensor& bias, std::size_t n, std::size_t ch, std::size_t plane) {
  if (!bias.defined()) return;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < ch; ++c) {
      double* p = v.data() + (i * ch + c) * plane;
      const double b = bias.at(c);
      for (std::size_t j = 0; j < plane; ++j) p[j] += b;
    }
}

void bias_grad(Node* bias, const std::vector<double>& g, std::size_t n, std::size_t ch, std::size_t plane) {
  if (bias == nullptr || !bias->requires_grad) return;
  auto gb = bias->grad_buffer();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < ch; ++c) gb[c] += kernels::active().sum(plane, g.data() + (i * ch + c) * plane);
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

int conv_out_size(int in, int k, int stride, int pad) {
  if (stride <= 0 || k <= 0 || pad < 0 || in + 2 * pad < k) {
    throw ShapeError("invalid convolution geometry: in=" + std::to_string(in) + " k=" + std::to_string(k) +
                     " stride=" + std::to_string(stride) + " pad=" + std::to_string(pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

int conv_transpose_out_size(int in, int k, int stride, int pad) {
  const int out = (in - 1) * stride - 2 * pad + k;
  if (stride <= 0 || k <= 0 || pad < 0 || in <= 0 || out <= 0 || pad >= k) {
    throw ShapeError("invalid transposed convolution geometry: in=" + std::to_string(in) + " k=" +
                     std::to_string(k) + " stride=" + std::to_string(stride) + " pad=" + std::to_string(pad));
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
  check_kernel("conv2d", input, kernel, 1);
  const int out_ch = kernel.dim(0);
  check_bias("conv2d", bias, out_ch);
  const int k = kernel.dim(2);
  const int oh = conv_out_size(input.dim(2), k, stride, pad);
  const int ow = conv_out_size(input.dim(3), k, stride, pad);
  const Geometry g{static_cast<std::size_t>(input.dim(1)), static_cast<std::size_t>(input.dim(2)),
                   static_cast<std::size_t>(input.dim(3)), static_cast<std::size_t>(k),
                   static_cast<std::size_t>(stride), static_cast<std::size_t>(pad),
                   static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)};
  const std::size_t n = input.dim(0), o = out_ch, in_plane = g.channels * g.in_h * g.in_w;
  const std::size_t rows = g.col_rows(), cols = g.col_cols();

  std::vector<double> v(n * o * cols);
  std::vector<double> col(rows * cols);
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    im2col(input.data().data() + i * in_plane, g, col.data());
    kt.gemm(Trans::No, Trans::No, o, cols, rows, 1.0, kernel.data().data(), rows, col.data(), cols, 0.0,
            v.data() + i * o * cols, cols);
  }
  add_bias(v, bias, n, o, cols);

  const bool rg = recording({&input, &kernel, &bias});
  Tensor out = make_result("conv2d", {static_cast<int>(n), out_ch, oh, ow}, std::move(v), rg);
  if (rg) {
    active_tape()->record("conv2d", [xn = input.ptr(), kn = kernel.ptr(), bn = bias.ptr(), on = out.ptr(), g, n, o,
                                     in_plane, rows, cols] {
      if (on->grad.empty()) return;
      const auto& kt = kernels::active();
      std::vector<double> col(rows * cols), dcol(rows * cols);
      for (std::size_t i = 0; i < n; ++i) {
        const double* gout = on->grad.data() + i * o * cols;
        if (kn->requires_grad) {
          im2col(xn->value.data() + i * in_plane, g, col.data());
          kt.gemm(Trans::No, Trans::Yes, o, rows, cols, 1.0, gout, cols, col.data(), cols, 1.0,
                  kn->grad_buffer().data(), rows);
        }
        if (xn->requires_grad) {
          kt.gemm(Trans::Yes, Trans::No, rows, cols, o, 1.0, kn->value.data(), rows, gout, cols, 0.0, dcol.data(),
                  cols);
          col2im(dcol.data(), g, xn->grad_buffer().data() + i * in_plane);
        }
      }
      bias_grad(bn.get(), on->grad, n, o, cols);
    });
  }
  return out;
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
  check_kernel("conv2d_transpose", input, kernel, 0);
  const int out_ch = kernel.dim(1);
  check_bias("conv2d_transpose", bias, out_ch);
  const int k = kernel.dim(2);
  const int oh = conv_transpose_out_size(input.dim(2), k, stride, pad);
  const int ow = conv_transpose_out_size(input.dim(3), k, stride, pad);
  // Geometry of the forward convolution this op is the adjoint of: it maps
  // the [O, oh, ow] output image onto the [I, H, W] input grid.
  const Geometry g{static_cast<std::size_t>(out_ch), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                   static_cast<std::size_t>(k),      static_cast<std::size_t>(stride),
                   static_cast<std::size_t>(pad),    static_cast<std::size_t>(input.dim(2)),
                   static_cast<std::size_t>(input.dim(3))};
  const std::size_t n = input.dim(0), ic = input.dim(1), o = out_ch;
  const std::size_t rows = g.col_rows(), cols = g.col_cols();
  const std::size_t out_plane = o * g.in_h * g.in_w, in_plane = ic * cols;

  std::vector<double> v(n * out_plane, 0.0);
  std::vector<double> col(rows * cols);
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    kt.gemm(Trans::Yes, Trans::No, rows, cols, ic, 1.0, kernel.data().data(), rows,
            input.data().data() + i * in_plane, cols, 0.0, col.data(), cols);
    col2im(col.data(), g, v.data() + i * out_plane);
  }
  add_bias(v, bias, n, o, g.in_h * g.in_w);

  const bool rg = recording({&input, &kernel, &bias});
  Tensor out = make_result("conv2d_transpose", {static_cast<int>(n), out_ch, oh, ow}, std::move(v), rg);
  if (rg) {
    active_tape()->record("conv2d_transpose", [xn = input.ptr(), kn = kernel.ptr(), bn = bias.ptr(), on = out.ptr(),
                                               g, n, ic, o, rows, cols, out_plane, in_plane] {
      if (on->grad.empty()) return;
      const auto& kt = kernels::active();
      std::vector<double> dcol(rows * cols);
      for (std::size_t i = 0; i < n; ++i) {
        im2col(on->grad.data() + i * out_plane, g, dcol.data());
        if (xn->requires_grad)
          kt.gemm(Trans::No, Trans::No, ic, cols, rows, 1.0, kn->value.data(), rows, dcol.data(), cols, 1.0,
                  xn->grad_buffer().data() + i * in_plane, cols);
        if (kn->requires_grad)
          kt.gemm(Trans::No, Trans::Yes, ic, rows, cols, 1.0, xn->value.data() + i * in_plane, cols, dcol.data(),
                  cols, 1.0, kn->grad_buffer().data(), rows);
      }
      bias_grad(bn.get(), on->grad, n, o, g.in_h * g.in_w);
    });
  }
  return out;
}

Tensor instance_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps) {
  if (input.rank() != 4 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != input.dim(1) ||
      beta.dim(0) != input.dim(1)) {
    throw ShapeError("instance_norm: input " + shape_str(input.shape()) + " with gamma " + shape_str(gamma.shape()) +
                     " and beta " + shape_str(beta.shape()));
  }
  const std::size_t n = input.dim(0), ch = input.dim(1), plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
  std::vector<double> xhat(input.size()), inv_std(n * ch), v(input.size());
  const auto x = input.data();
  for (std::size_t p = 0; p < n * ch; ++p) {
    const double* xp = x.data() + p * plane;
    double m = 0.0;
    for (std::size_t j = 0; j < plane; ++j) m += xp[j];
    m /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t j = 0; j < plane; ++j) var += (xp[j] - m) * (xp[j] - m);
    var /= static_cast<double>(plane);
    inv_std[p] = 1.0 / std::sqrt(var + eps);
    const std::size_t c = p % ch;
    for (std::size_t j = 0; j < plane; ++j) {
      xhat[p * plane + j] = (xp[j] - m) * inv_std[p];
      v[p * plane + j] = gamma.at(c) * xhat[p * plane + j] + beta.at(c);
    }
  }
  const bool rg = recording({&input, &gamma, &beta});
  Tensor out = make_result("instance_norm", input.shape(), std::move(v), rg);
  if (rg) {
    active_tape()->record("instance_norm", [xn = input.ptr(), gn = gamma.ptr(), bn = beta.ptr(), on = out.ptr(),
                                            xhat = std::move(xhat), inv_std = std::move(inv_std), n, ch, plane] {
      if (on->grad.empty()) return;
      const auto& dy = on->grad;
      const double np = static_cast<double>(plane);
      for (std::size_t p = 0; p < n * ch; ++p) {
        const std::size_t c = p % ch;
        const double* d = dy.data() + p * plane;
        const double* xh = xhat.data() + p * plane;
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t j = 0; j < plane; ++j) {
          sum_d += d[j];
          sum_dx += d[j] * xh[j];
        }
        if (gn->requires_grad) gn->grad_buffer()[c] += sum_dx;
        if (bn->requires_grad) bn->grad_buffer()[c] += sum_d;
        if (xn->requires_grad) {
          const double gc = gn->value[c];
          double* gx = xn->grad_buffer().data() + p * plane;
          const double k = gc * inv_std[p] / np;
          for (std::size_t j = 0; j < plane; ++j) gx[j] += k * (np * d[j] - sum_d - xh[j] * sum_dx);
        }
      }
    });
  }
  return out;
}

LstmState lstm_recurrence(const Tensor& x_gates, const LstmState& prev, const Tensor& wh) {
  const int hidden = wh.dim(0);
  if (x_gates.rank() != 2 || wh.rank() != 2 || wh.dim(1) != 4 * hidden || x_gates.dim(1) != 4 * hidden ||
      prev.h.rank() != 2 || prev.c.rank() != 2 || prev.h.dim(1) != hidden || prev.c.dim(1) != hidden ||
      prev.h.dim(0) != x_gates.dim(0) || prev.c.dim(0) != x_gates.dim(0)) {
    throw ShapeError("lstm: gates " + shape_str(x_gates.shape()) + ", h " + shape_str(prev.h.shape()) + ", c " +
                     shape_str(prev.c.shape()) + ", wh " + shape_str(wh.shape()));
  }
  const std::size_t b = x_gates.dim(0), h = hidden, g4 = 4 * h;
  std::vector<double> act(x_gates.data().begin(), x_gates.data().end());
  kernels::active().gemm(Trans::No, Trans::No, b, g4, h, 1.0, prev.h.data().data(), h, wh.data().data(), g4, 1.0,
                         act.data(), g4);
  std::vector<double> hv(b * h), cv(b * h), tanh_c(b * h);
  const auto c0 = prev.c.data();
  for (std::size_t r = 0; r < b; ++r) {
    double* a = act.data() + r * g4;
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sigm(a[j]);
      const double fg = sigm(a[h + j]);
      const double gg = std::tanh(a[2 * h + j]);
      const double og = sigm(a[3 * h + j]);
      a[j] = ig;
      a[h + j] = fg;
      a[2 * h + j] = gg;
      a[3 * h + j] = og;
      const double c = fg * c0[r * h + j] + ig * gg;
      cv[r * h + j] = c;
      tanh_c[r * h + j] = std::tanh(c);
      hv[r * h + j] = og * tanh_c[r * h + j];
    }
  }
  const bool rg = recording({&x_gates, &prev.h, &prev.c, &wh});
  Tensor h_out = make_result("lstm", prev.h.shape(), std::move(hv), rg);
  Tensor c_out = make_result("lstm", prev.c.shape(), std::move(cv), rg);
  if (rg) {
    active_tape()->record("lstm", [xn = x_gates.ptr(), hn = prev.h.ptr(), cn = prev.c.ptr(), wn = wh.ptr(),
                                   ho = h_out.ptr(), co = c_out.ptr(), act = std::move(act),
                                   tanh_c = std::move(tanh_c), b, h, g4] {
      if (ho->grad.empty() && co->grad.empty()) return;
      std::vector<double> dpre(b * g4);
      std::span<double> dc_prev = cn->requires_grad ? cn->grad_buffer() : std::span<double>{};
      for (std::size_t r = 0; r < b; ++r) {
        const double* a = act.data() + r * g4;
        double* d = dpre.data() + r * g4;
        for (std::size_t j = 0; j < h; ++j) {
          const std::size_t idx = r * h + j;
          const double dh = ho->grad.empty() ? 0.0 : ho->grad[idx];
          const double tc = tanh_c[idx];
          const double ig = a[j], fg = a[h + j], gg = a[2 * h + j], og = a[3 * h + j];
          const double dc = (co->grad.empty() ? 0.0 : co->grad[idx]) + dh * og * (1.0 - tc * tc);
          d[j] = dc * gg * ig * (1.0 - ig);
          d[h + j] = dc * cn->value[idx] * fg * (1.0 - fg);
          d[2 * h + j] = dc * ig * (1.0 - gg * gg);
          d[3 * h + j] = dh * tc * og * (1.0 - og);
          if (!dc_prev.empty()) dc_prev[idx] += dc * fg;
        }
      }
      const auto& kt = kernels::active();
      if (xn->requires_grad) kt.axpy(dpre.size(), 1.0, dpre.data(), xn->grad_buffer().data());
      if (hn->requires_grad)
        kt.gemm(Trans::No, Trans::Yes, b, h, g4, 1.0, dpre.data(), g4, wn->value.data(), g4, 1.0,
                hn->grad_buffer().data(), h);
      if (wn->requires_grad)
        kt.gemm(Trans::Yes, Trans::No, h, g4, b, 1.0, hn->value.data(), h, dpre.data(), g4, 1.0,
                wn->grad_buffer().data(), g4);
    });
  }
  return {h_out, c_out};
}

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmWeights& w) {
  return lstm_recurrence(linear(x, w.wx, w.bias), prev, w.wh);
}

Tensor bilstm(const Tensor& seq, const LstmWeights& forward, const LstmWeights& backward) {
  if (seq.rank() != 3) throw ShapeError("bilstm: expected [T,B,D] sequence, got " + shape_str(seq.shape()));
  const int steps = seq.dim(0), batch = seq.dim(1), width = seq.dim(2);
  if (forward.input_size() != width || backward.input_size() != width) {
    throw ShapeError("bilstm: input width " + std::to_string(width) + " does not match weights " +
                     shape_str(forward.wx.shape()));
  }
  const Tensor flat = reshape(seq, {steps * batch, width});
  auto run = [&](const LstmWeights& w, bool reverse) {
    const Tensor gates = linear(flat, w.wx, w.bias);
    LstmState st{Tensor::zeros({batch, w.hidden_size()}), Tensor::zeros({batch, w.hidden_size()})};
    for (int s = 0; s < steps; ++s) {
      const int t = reverse ? steps - 1 - s : s;
      st = lstm_recurrence(slice_rows(gates, t * batch, batch), st, w.wh);
    }
    return st.h;
  };
  return concat_cols(run(forward, false), run(backward, true));
}

}  // namespace p2s::core
