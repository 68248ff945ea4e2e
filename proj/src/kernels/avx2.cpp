// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma; nothing in
// it may run before dispatch.cpp has confirmed CPU support.

#include "p2s/kernels/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <vector>

namespace p2s::kernels {
namespace {

constexpr std::size_t kBlockK = 256;

inline __m256i tail_mask(std::size_t rem) {
  alignas(32) static const long long lanes[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes + 4 - rem));
}

// Accumulates alpha * A[0:R, 0:kc] * B[0:kc, 0:n] into C for R <= 4 rows.
template <int R>
void row_panel(std::size_t n, std::size_t kc, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc0[R], acc1[R];
    for (int r = 0; r < R; ++r) {
      acc0[r] = _mm256_setzero_pd();
      acc1[r] = _mm256_setzero_pd();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
      const __m256d b1 = _mm256_loadu_pd(b + p * ldb + j + 4);
      for (int r = 0; r < R; ++r) {
        const __m256d ar = _mm256_broadcast_sd(a + r * lda + p);
        acc0[r] = _mm256_fmadd_pd(ar, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_pd(ar, b1, acc1[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* cr = c + r * ldc + j;
      _mm256_storeu_pd(cr, _mm256_fmadd_pd(va, acc0[r], _mm256_loadu_pd(cr)));
      _mm256_storeu_pd(cr + 4, _mm256_fmadd_pd(va, acc1[r], _mm256_loadu_pd(cr + 4)));
    }
  }
  for (; j < n; j += 4) {
    const std::size_t rem = std::min<std::size_t>(4, n - j);
    const __m256i mask = tail_mask(rem);
    __m256d acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256d b0 = _mm256_maskload_pd(b + p * ldb + j, mask);
      for (int r = 0; r < R; ++r) {
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * lda + p), b0, acc[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* cr = c + r * ldc + j;
      _mm256_maskstore_pd(cr, mask, _mm256_fmadd_pd(va, acc[r], _mm256_maskload_pd(cr, mask)));
    }
  }
}

void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
               const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
               double* c, std::size_t ldc) {
  thread_local std::vector<double> apack, bpack;
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    if (beta == 0.0) {
      std::fill(crow, crow + n, 0.0);
    } else if (beta != 1.0) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0) return;

  if (ta == Trans::Yes) {
    apack.resize(m * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) apack[i * k + p] = a[p * lda + i];
    a = apack.data();
    lda = k;
  }
  if (tb == Trans::Yes) {
    bpack.resize(k * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) bpack[p * n + j] = b[j * ldb + p];
    b = bpack.data();
    ldb = n;
  }

  for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
    const std::size_t kc = std::min(kBlockK, k - p0);
    const double* ablk = a + p0;
    const double* bblk = b + p0 * ldb;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) row_panel<4>(n, kc, alpha, ablk + i * lda, lda, bblk, ldb, c + i * ldc, ldc);
    switch (m - i) {
      case 3: row_panel<3>(n, kc, alpha, ablk + i * lda, lda, bblk, ldb, c + i * ldc, ldc); break;
      case 2: row_panel<2>(n, kc, alpha, ablk + i * lda, lda, bblk, ldb, c + i * ldc, ldc); break;
      case 1: row_panel<1>(n, kc, alpha, ablk + i * lda, lda, bblk, ldb, c + i * ldc, ldc); break;
      default: break;
    }
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_avx2(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_avx2(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_avx2(std::size_t n, const double* x) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(x + i), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(x + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

constexpr KernelTable kAvx2{
    Backend::Avx2, gemm_avx2, axpy_avx2, add_avx2, mul_avx2, scale_avx2, dot_avx2, sum_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table_compiled() { return &kAvx2; }
}  // namespace detail

}  // namespace p2s::kernels

#else

namespace p2s::kernels::detail {
const KernelTable* avx2_table_compiled() { return nullptr; }
}  // namespace p2s::kernels::detail

#endif
