#include "p2s/kernels/kernels.hpp"

namespace p2s::kernels {
namespace {

void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    if (beta == 0.0) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    } else if (beta != 1.0) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double av = alpha * (ta == Trans::No ? a[i * lda + p] : a[p * lda + i]);
      if (av == 0.0) continue;
      if (tb == Trans::No) {
        const double* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * b[j * ldb + p];
      }
    }
  }
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_scalar(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_scalar(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

constexpr KernelTable kScalar{
    Backend::Scalar, gemm_scalar, axpy_scalar, add_scalar, mul_scalar,
    scale_scalar,    dot_scalar,  sum_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace p2s::kernels
