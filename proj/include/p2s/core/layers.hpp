#pragma once

#include <utility>

#include "p2s/core/tensor.hpp"

namespace p2s::core {

/// Output side of a strided convolution: floor((in + 2*pad - k) / stride) + 1.
int conv_out_size(int in, int k, int stride, int pad);
/// Output side of a transposed convolution: (in - 1) * stride - 2*pad + k.
int conv_transpose_out_size(int in, int k, int stride, int pad);

/// input [N,C,H,W], kernel [O,C,k,k], optional bias [O] -> [N,O,Ho,Wo].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad);

/// input [N,I,H,W], kernel [I,O,k,k], optional bias [O] -> [N,O,Ho,Wo].
/// Exactly the adjoint of conv2d (w.r.t. its input) for the same kernel array.
Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad);

/// Per-(n,c) plane normalization followed by a per-channel affine map.
Tensor instance_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Weights of a peephole-free LSTM. Gate blocks along the 4H axis are
/// ordered input, forget, cell candidate, output.
struct LstmWeights {
  Tensor wx;    // [D, 4H]
  Tensor wh;    // [H, 4H]
  Tensor bias;  // [4H]

  int input_size() const { return wx.dim(0); }
  int hidden_size() const { return wh.dim(0); }
};

struct LstmState {
  Tensor h;  // [B, H]
  Tensor c;  // [B, H]
};

/// Fused recurrence given the already-projected input term:
/// pre = x_gates + h * wh;  c' = f*c + i*g;  h' = o*tanh(c').
LstmState lstm_recurrence(const Tensor& x_gates, const LstmState& prev, const Tensor& wh);

/// One LSTM step on raw input x [B, D].
LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmWeights& w);

/// Bidirectional LSTM over seq [T, B, D] from zero state. Returns
/// [B, 2H]: final forward hidden state then final backward hidden state.
Tensor bilstm(const Tensor& seq, const LstmWeights& forward, const LstmWeights& backward);

}  // namespace p2s::core
