#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "p2s/core/adam.hpp"
#include "p2s/core/gradcheck.hpp"
#include "p2s/core/layers.hpp"
#include "p2s/core/losses.hpp"
#include "p2s/core/ops.hpp"
#include "p2s/core/params.hpp"
#include "p2s/errors.hpp"
#include "p2s/rng.hpp"

using namespace p2s;
using namespace p2s::core;

namespace {

Tensor rand_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0, bool rg = false) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), rg);
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Unfused single-sample LSTM step written directly from the gate equations.
void lstm_reference(const std::vector<double>& x, const std::vector<double>& h, const std::vector<double>& c,
                    const Tensor& wx, const Tensor& wh, const Tensor& b, std::vector<double>& h_out,
                    std::vector<double>& c_out) {
  const std::size_t d = x.size(), hs = h.size();
  h_out.assign(hs, 0.0);
  c_out.assign(hs, 0.0);
  for (std::size_t j = 0; j < hs; ++j) {
    double pre[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t col = gate * hs + j;
      double s = b.at(col);
      for (std::size_t p = 0; p < d; ++p) s += x[p] * wx.at(p * 4 * hs + col);
      for (std::size_t p = 0; p < hs; ++p) s += h[p] * wh.at(p * 4 * hs + col);
      pre[gate] = s;
    }
    const double i = sigm(pre[0]), f = sigm(pre[1]), g = std::tanh(pre[2]), o = sigm(pre[3]);
    c_out[j] = f * c[j] + i * g;
    h_out[j] = o * std::tanh(c_out[j]);
  }
}

LstmWeights rand_lstm(Rng& rng, int d, int h) {
  return {rand_tensor(rng, {d, 4 * h}, -0.5, 0.5, true), rand_tensor(rng, {h, 4 * h}, -0.5, 0.5, true),
          rand_tensor(rng, {4 * h}, -0.5, 0.5, true)};
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  const Tensor y = softmax(Tensor::from({3}, {0, 0, 0}));
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("tanh derivative at zero is one") {
  Tensor x = Tensor::scalar(0.0, true);
  Tape tape;
  {
    TapeScope s(tape);
    tape.backward(sum(tanh(x)));
  }
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("matmul matches naive triple loop") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(9)), k = 1 + static_cast<int>(rng.below(40)),
              n = 1 + static_cast<int>(rng.below(20));
    const Tensor a = rand_tensor(rng, {m, k});
    const Tensor b = rand_tensor(rng, {k, n});
    const Tensor c = matmul(a, b);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < k; ++p) s += a.at(i * k + p) * b.at(p * n + j);
        CHECK(std::abs(c.at(i * n + j) - s) < 1e-10);
      }
  }
}

TEST_CASE("shape mismatch errors name both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, Tensor::zeros({2})), ShapeError);
  CHECK_THROWS_AS(mul(a, Tensor::zeros({3, 3})), ShapeError);
}

TEST_CASE("add broadcasts only over leading dimensions") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({3}, {10, 20, 30});
  const Tensor c = add(a, b);
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{11, 22, 33, 14, 25, 36});
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor unused = Tensor::from({3}, {1, 1, 1}, true);
  Tape tape;
  {
    TapeScope s(tape);
    tape.backward(sum(mul(x, x)));
  }
  CHECK(x.grad() == std::vector<double>{2, 4});
  CHECK(unused.grad() == std::vector<double>{0, 0, 0});
}

TEST_CASE("gradients accumulate across uses and across backward passes") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    TapeScope s(tape);
    tape.backward(sum(add(x, x)));
  }
  CHECK(x.grad() == std::vector<double>{4, 4});
  x.zero_grad();
  CHECK(x.grad() == std::vector<double>{0, 0});
}

TEST_CASE("backward rejects non-scalar loss and repeated use") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  TapeScope s(tape);
  const Tensor y = square(x);
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
  const Tensor loss = sum(y);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
  tape.backward(sum(square(x)));  // fresh forward is fine
  CHECK(x.grad() == std::vector<double>{4, 8});
}

TEST_CASE("no tape means no recording") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor y = square(x);
  Tape tape;
  CHECK(tape.size() == 0);
  CHECK(y.data()[1] == 4.0);
}

TEST_CASE("non-finite values are reported with the originating op") {
  try {
    log(Tensor::from({2}, {1.0, -1.0}));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.op() == "log");
  }
  const Tensor bad = Tensor::from({2}, {1.0, std::nan("")});
  try {
    tanh(bad);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.op() == "tanh");
  }
  try {
    matmul(Tensor::from({1, 2}, {1.0, std::numeric_limits<double>::infinity()}), Tensor::from({2, 1}, {0.0, 1.0}));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.op() == "matmul");
  }
}

TEST_CASE("conv2d geometry") {
  CHECK(conv_out_size(48, 3, 2, 1) == 24);
  const int trail[] = {48, 24, 12, 6, 3, 2};
  for (int i = 0; i < 5; ++i) CHECK(conv_out_size(trail[i], 3, 2, 1) == trail[i + 1]);
  CHECK_THROWS_AS(conv_out_size(1, 5, 1, 1), ShapeError);
  const Tensor x = Tensor::zeros({1, 1, 48, 48});
  const Tensor k = Tensor::zeros({4, 1, 3, 3});
  CHECK(conv2d(x, k, Tensor(), 2, 1).shape() == Shape{1, 4, 24, 24});
}

TEST_CASE("conv2d with identity 1x1 kernel is the identity") {
  Rng rng(1);
  const Tensor x = rand_tensor(rng, {2, 3, 5, 4});
  std::vector<double> kv(9, 0.0);
  for (int c = 0; c < 3; ++c) kv[c * 3 + c] = 1.0;
  const Tensor y = conv2d(x, Tensor::from({3, 3, 1, 1}, kv), Tensor(), 1, 0);
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>(x.data().begin(), x.data().end()));
}

TEST_CASE("conv2d matches direct summation") {
  Rng rng(2);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      const Tensor x = rand_tensor(rng, {1, 1, 5, 5});
      const Tensor k = rand_tensor(rng, {2, 1, 3, 3});
      const Tensor b = rand_tensor(rng, {2});
      const Tensor y = conv2d(x, k, b, stride, pad);
      const int out = (5 + 2 * pad - 3) / stride + 1;
      REQUIRE(y.shape() == Shape{1, 2, out, out});
      for (int o = 0; o < 2; ++o)
        for (int oy = 0; oy < out; ++oy)
          for (int ox = 0; ox < out; ++ox) {
            double s = b.at(o);
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || ix < 0 || iy >= 5 || ix >= 5) continue;
                s += x.at(iy * 5 + ix) * k.at(o * 9 + ky * 3 + kx);
              }
            CHECK(std::abs(y.at((o * out + oy) * out + ox) - s) < 1e-10);
          }
    }
  }
}

TEST_CASE("conv2d_transpose geometry and linearity") {
  CHECK(conv_transpose_out_size(2, 2, 2, 0) == 4);
  const Tensor y = conv2d_transpose(Tensor::zeros({1, 3, 2, 2}), Tensor::full({3, 2, 2, 2}, 0.7), Tensor(), 2, 0);
  CHECK(y.shape() == Shape{1, 2, 4, 4});
  for (double v : y.data()) CHECK(v == 0.0);
  CHECK(conv_transpose_out_size(2, 3, 2, 1) == 3);
  CHECK(conv_transpose_out_size(3, 4, 2, 1) == 6);
}

TEST_CASE("conv2d_transpose is the adjoint of conv2d") {
  Rng rng(4);
  struct Case {
    int k, s, p, h;
  };
  for (const Case cs : {Case{3, 2, 1, 7}, Case{4, 2, 1, 6}, Case{3, 1, 1, 5}, Case{2, 2, 0, 4}, Case{3, 2, 1, 3}}) {
    for (int seed = 0; seed < 10; ++seed) {
      const Tensor x = rand_tensor(rng, {2, 3, cs.h, cs.h});
      const Tensor k = rand_tensor(rng, {4, 3, cs.k, cs.k});
      const Tensor cx = conv2d(x, k, Tensor(), cs.s, cs.p);
      const Tensor y = rand_tensor(rng, cx.shape());
      const Tensor ty = conv2d_transpose(y, k, Tensor(), cs.s, cs.p);
      if (ty.shape() != x.shape()) continue;  // geometry not invertible for this stride remainder
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx.at(i) * y.at(i);
      for (std::size_t i = 0; i < x.size(); ++i) rhs += x.at(i) * ty.at(i);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("instance_norm statistics") {
  Rng rng(6);
  const Tensor x = rand_tensor(rng, {2, 3, 4, 5}, -3.0, 5.0);
  const Tensor y = instance_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({3}));
  for (int p = 0; p < 6; ++p) {
    double m = 0.0, v = 0.0;
    for (int j = 0; j < 20; ++j) m += y.at(p * 20 + j);
    m /= 20;
    for (int j = 0; j < 20; ++j) v += (y.at(p * 20 + j) - m) * (y.at(p * 20 + j) - m);
    v /= 20;
    CHECK(std::abs(m) < 1e-8);
    CHECK(std::abs(v - 1.0) < 1e-5 + 1e-6);  // eps shrinks the variance slightly
  }
  const Tensor z = instance_norm(instance_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), 0.0),
                                 Tensor::full({3}, 2.0), Tensor::full({3}, 3.0), 0.0);
  for (int p = 0; p < 6; ++p) {
    double m = 0.0, v = 0.0;
    for (int j = 0; j < 20; ++j) m += z.at(p * 20 + j);
    m /= 20;
    for (int j = 0; j < 20; ++j) v += (z.at(p * 20 + j) - m) * (z.at(p * 20 + j) - m);
    CHECK(m == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::sqrt(v / 20) == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("instance_norm of a constant plane is zero before the affine map") {
  const Tensor y = instance_norm(Tensor::full({1, 2, 3, 3}, 4.2), Tensor::full({2}, 1.0), Tensor::zeros({2}));
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell with zero weights") {
  const LstmWeights w{Tensor::zeros({3, 8}), Tensor::zeros({2, 8}), Tensor::zeros({8})};
  const auto st = lstm_cell(Tensor::full({1, 3}, 0.5), {Tensor::zeros({1, 2}), Tensor::zeros({1, 2})}, w);
  for (double v : st.h.data()) CHECK(v == 0.0);
  for (double v : st.c.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell keeps the cell when forget is open and input is closed") {
  std::vector<double> b(8, 0.0);
  b[0] = b[1] = -50.0;  // input gate
  b[2] = b[3] = 50.0;   // forget gate
  const LstmWeights w{Tensor::zeros({1, 8}), Tensor::zeros({2, 8}), Tensor::from({8}, b)};
  const auto st = lstm_cell(Tensor::full({1, 1}, 1.0), {Tensor::zeros({1, 2}), Tensor::from({1, 2}, {0.3, -0.7})}, w);
  CHECK(st.c.at(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(st.c.at(1) == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("lstm_cell matches unfused scalar reference") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 3, h = 4, batch = 3;
    const LstmWeights w = rand_lstm(rng, d, h);
    const Tensor x = rand_tensor(rng, {batch, d});
    const Tensor h0 = rand_tensor(rng, {batch, h});
    const Tensor c0 = rand_tensor(rng, {batch, h});
    const auto st = lstm_cell(x, {h0, c0}, w);
    for (int r = 0; r < batch; ++r) {
      std::vector<double> xr(x.data().begin() + r * d, x.data().begin() + (r + 1) * d);
      std::vector<double> hr(h0.data().begin() + r * h, h0.data().begin() + (r + 1) * h);
      std::vector<double> cr(c0.data().begin() + r * h, c0.data().begin() + (r + 1) * h);
      std::vector<double> ho, co;
      lstm_reference(xr, hr, cr, w.wx, w.wh, w.bias, ho, co);
      for (int j = 0; j < h; ++j) {
        CHECK(std::abs(st.h.at(r * h + j) - ho[j]) < 1e-10);
        CHECK(std::abs(st.c.at(r * h + j) - co[j]) < 1e-10);
      }
    }
  }
}

TEST_CASE("bilstm") {
  Rng rng(9);
  const int d = 2, h = 3, batch = 2;

  SUBCASE("single step: both directions see the same input") {
    const LstmWeights w = rand_lstm(rng, d, h);
    const Tensor seq = rand_tensor(rng, {1, batch, d});
    const Tensor out = bilstm(seq, w, w);
    for (int r = 0; r < batch; ++r)
      for (int j = 0; j < h; ++j) CHECK(out.at(r * 2 * h + j) == out.at(r * 2 * h + h + j));
  }

  SUBCASE("palindromic input with tied weights gives equal halves") {
    const LstmWeights w = rand_lstm(rng, d, h);
    const Tensor a = rand_tensor(rng, {1, batch, d});
    const Tensor b = rand_tensor(rng, {1, batch, d});
    const Tensor seq = concat_rows({a, b, a});
    const Tensor out = bilstm(seq, w, w);
    for (int r = 0; r < batch; ++r)
      for (int j = 0; j < h; ++j) CHECK(out.at(r * 2 * h + j) == doctest::Approx(out.at(r * 2 * h + h + j)).epsilon(1e-14));
  }

  SUBCASE("T=4 matches step-by-step unrolled reference") {
    const LstmWeights wf = rand_lstm(rng, d, h);
    const LstmWeights wb = rand_lstm(rng, d, h);
    const int steps = 4;
    const Tensor seq = rand_tensor(rng, {steps, batch, d});
    const Tensor out = bilstm(seq, wf, wb);
    for (int r = 0; r < batch; ++r) {
      auto run = [&](const LstmWeights& w, bool rev) {
        std::vector<double> hh(h, 0.0), cc(h, 0.0), ho, co;
        for (int s = 0; s < steps; ++s) {
          const int t = rev ? steps - 1 - s : s;
          std::vector<double> x(seq.data().begin() + (t * batch + r) * d, seq.data().begin() + (t * batch + r + 1) * d);
          lstm_reference(x, hh, cc, w.wx, w.wh, w.bias, ho, co);
          hh = ho;
          cc = co;
        }
        return hh;
      };
      const auto hf = run(wf, false);
      const auto hb = run(wb, true);
      for (int j = 0; j < h; ++j) {
        CHECK(std::abs(out.at(r * 2 * h + j) - hf[j]) < 1e-10);
        CHECK(std::abs(out.at(r * 2 * h + h + j) - hb[j]) < 1e-10);
      }
    }
  }

  CHECK_THROWS_AS(bilstm(Tensor::zeros({2, 3}), rand_lstm(rng, d, h), rand_lstm(rng, d, h)), ShapeError);
}

TEST_CASE("grad_check of a quadratic is exact to FD order") {
  const double err = grad_check([](const Tensor& x) { return sum(mul(x, x)); }, Tensor::from({3}, {0.3, -1.2, 2.0}));
  CHECK(err < 1e-10);
}

TEST_CASE("every differentiable op passes grad_check over 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    auto weights = [&](Shape s) { return rand_tensor(rng, std::move(s)); };
    const Tensor wsum = weights({3, 4});  // fixed random projection to a scalar
    auto proj = [&](const Tensor& t) { return sum(mul(t, wsum)); };
    struct Check {
      const char* name;
      std::function<Tensor()> f;
      std::vector<Tensor> inputs;
    };
    Tensor a = weights({3, 4}), b = weights({3, 4}), bias = weights({4}), m = weights({4, 4});
    Tensor pos = rand_tensor(rng, {3, 4}, 0.5, 2.0);
    std::vector<Check> checks{
        {"matmul", [&] { return proj(matmul(a, m)); }, {a, m}},
        {"add", [&] { return proj(add(a, bias)); }, {a, bias}},
        {"sub", [&] { return proj(sub(a, bias)); }, {a, bias}},
        {"mul", [&] { return proj(mul(a, b)); }, {a, b}},
        {"mul_bcast", [&] { return proj(mul(a, bias)); }, {a, bias}},
        {"scale", [&] { return proj(scale(a, -1.7)); }, {a}},
        {"tanh", [&] { return proj(tanh(a)); }, {a}},
        {"sigmoid", [&] { return proj(sigmoid(a)); }, {a}},
        {"relu", [&] { return proj(relu(a)); }, {a}},
        {"exp", [&] { return proj(exp(a)); }, {a}},
        {"log", [&] { return proj(log(pos)); }, {pos}},
        {"square", [&] { return proj(square(a)); }, {a}},
        {"softmax", [&] { return proj(softmax(a)); }, {a}},
        {"mean", [&] { return mean(square(a)); }, {a}},
        {"reshape", [&] { return proj(reshape(reshape(a, {2, 6}), {3, 4})); }, {a}},
        {"concat_slice",
         [&] { return proj(concat_cols(slice_cols(a, 0, 1), slice_cols(concat_cols(b, a), 5, 3))); },
         {a, b}},
        {"rows", [&] { return proj(concat_rows({slice_rows(b, 2, 1), slice_rows(a, 0, 2)})); }, {a, b}},
        {"mse", [&] { return mse(a, b); }, {a, b}},
        {"cross_entropy", [&] { return softmax_cross_entropy(a, {0, 3, 1}); }, {a}},
    };
    for (auto& c : checks) {
      const double err = grad_check(c.f, c.inputs);
      INFO(c.name << " seed " << seed);
      CHECK(err < 1e-4);
    }

    Tensor x4 = rand_tensor(rng, {2, 2, 5, 5});
    Tensor k4 = rand_tensor(rng, {3, 2, 3, 3});
    Tensor b3 = rand_tensor(rng, {3});
    const Tensor w_conv = rand_tensor(rng, {2, 3, 3, 3});
    Tensor conv_in[] = {x4, k4, b3};
    CHECK(grad_check([&] { return sum(mul(conv2d(x4, k4, b3, 2, 1), w_conv)); }, conv_in) < 1e-4);

    Tensor xt = rand_tensor(rng, {2, 3, 3, 3});
    Tensor kt = rand_tensor(rng, {3, 2, 4, 4});
    Tensor bt = rand_tensor(rng, {2});
    const Tensor w_t = rand_tensor(rng, {2, 2, 6, 6});
    Tensor t_in[] = {xt, kt, bt};
    CHECK(grad_check([&] { return sum(mul(conv2d_transpose(xt, kt, bt, 2, 1), w_t)); }, t_in) < 1e-4);

    Tensor xn = rand_tensor(rng, {2, 3, 2, 3}, -2.0, 2.0);
    Tensor gn = rand_tensor(rng, {3}, 0.5, 1.5);
    Tensor bn = rand_tensor(rng, {3});
    const Tensor w_n = rand_tensor(rng, {2, 3, 2, 3});
    Tensor n_in[] = {xn, gn, bn};
    CHECK(grad_check([&] { return sum(mul(instance_norm(xn, gn, bn), w_n)); }, n_in) < 1e-4);

    LstmWeights lw = rand_lstm(rng, 3, 4);
    Tensor lx = rand_tensor(rng, {2, 3});
    Tensor lh = rand_tensor(rng, {2, 4});
    Tensor lc = rand_tensor(rng, {2, 4});
    const Tensor w_h = rand_tensor(rng, {2, 4});
    const Tensor w_c = rand_tensor(rng, {2, 4});
    Tensor l_in[] = {lx, lh, lc, lw.wx, lw.wh, lw.bias};
    CHECK(grad_check(
              [&] {
                const auto st = lstm_cell(lx, {lh, lc}, lw);
                const auto st2 = lstm_cell(lx, st, lw);
                return add(sum(mul(st2.h, w_h)), sum(mul(st.c, w_c)));
              },
              l_in) < 1e-4);

    LstmWeights f = rand_lstm(rng, 2, 3), bw = rand_lstm(rng, 2, 3);
    Tensor seq = rand_tensor(rng, {4, 2, 2});
    const Tensor w_bi = rand_tensor(rng, {2, 6});
    Tensor bi_in[] = {seq, f.wx, f.wh, f.bias, bw.wx, bw.wh, bw.bias};
    CHECK(grad_check([&] { return sum(mul(bilstm(seq, f, bw), w_bi)); }, bi_in) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::from({3}, {1, 2, 3}, true);
  AdamState st;
  std::vector<Tensor> ps{p};
  std::vector<std::vector<double>> gs{{0, 0, 0}};
  adam_step(ps, gs, st);
  CHECK(st.t == 1);
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) == std::vector<double>{1, 2, 3});
}

TEST_CASE("adam: first step with unit gradient") {
  Tensor p = Tensor::scalar(0.0, true);
  AdamState st;
  st.lr = 0.1;
  std::vector<Tensor> ps{p};
  std::vector<std::vector<double>> gs{{1.0}};
  adam_step(ps, gs, st);
  // m = 0.5, v = 0.1; bias-corrected mhat = 1, vhat = 1
  CHECK(p.item() == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("adam: two steps match scalar reference") {
  Tensor p = Tensor::from({2}, {0.5, -0.25}, true);
  AdamState st;
  std::vector<Tensor> ps{p};
  const double g1[2] = {0.3, -2.0}, g2[2] = {-0.1, 0.7};
  adam_step(ps, std::vector<std::vector<double>>{{g1[0], g1[1]}}, st);
  adam_step(ps, std::vector<std::vector<double>>{{g2[0], g2[1]}}, st);
  const double init[2] = {0.5, -0.25};
  for (int i = 0; i < 2; ++i) {
    double x = init[i], m = 0, v = 0;
    const double gs[2] = {g1[i], g2[i]};
    for (int t = 1; t <= 2; ++t) {
      m = 0.5 * m + 0.5 * gs[t - 1];
      v = 0.9 * v + 0.1 * gs[t - 1] * gs[t - 1];
      x -= 1e-4 * (m / (1 - std::pow(0.5, t))) / (std::sqrt(v / (1 - std::pow(0.9, t))) + 1e-8);
    }
    CHECK(std::abs(p.at(i) - x) < 1e-12);
  }
}

TEST_CASE("adam: mismatched gradient sizes are rejected") {
  Tensor p = Tensor::from({2}, {0, 0}, true);
  AdamState st;
  std::vector<Tensor> ps{p};
  CHECK_THROWS_AS(adam_step(ps, std::vector<std::vector<double>>{{1.0}}, st), ShapeError);
}

TEST_CASE("parameter files round-trip bit-exactly") {
  Rng rng(12);
  ParameterSet set;
  set.add("enc/w", rand_tensor(rng, {3, 4}, -1e6, 1e6));
  set.add("enc/b", Tensor::from({2}, {-0.0, 5e-324}));
  set.add("dec/λ", rand_tensor(rng, {1, 2, 3, 1}));
  std::stringstream ss;
  set.write(ss);
  const ParameterSet back = ParameterSet::read(ss);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& [n1, t1] = set.entries()[i];
    const auto& [n2, t2] = back.entries()[i];
    CHECK(n1 == n2);
    CHECK(t1.shape() == t2.shape());
    for (std::size_t j = 0; j < t1.size(); ++j) CHECK(std::bit_cast<std::uint64_t>(t1.at(j)) == std::bit_cast<std::uint64_t>(t2.at(j)));
  }
  std::stringstream again;
  back.write(again);
  CHECK(again.str() == ss.str());

  std::stringstream bad("NOTPARAMxxxx");
  CHECK_THROWS_AS(ParameterSet::read(bad), ParseError);
  std::string truncated = ss.str().substr(0, ss.str().size() - 3);
  std::stringstream tr(truncated);
  CHECK_THROWS_AS(ParameterSet::read(tr), ParseError);
}

TEST_CASE("parameter file header is little-endian") {
  ParameterSet set;
  set.add("x", Tensor::scalar(1.0));
  std::stringstream ss;
  set.write(ss);
  const std::string s = ss.str();
  CHECK(s.substr(0, 8) == "P2SPARAM");
  CHECK(static_cast<unsigned char>(s[8]) == 1);
  CHECK(static_cast<unsigned char>(s[12]) == 1);
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F
  CHECK(static_cast<unsigned char>(s[s.size() - 1]) == 0x3F);
}
