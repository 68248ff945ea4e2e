#pragma once

// Dense double-precision inner loops used by the tensor engine.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (currently AVX2+FMA on x86-64) are compiled into separate translation
// units with their own target flags and selected once at runtime from the
// CPU feature set. The P2S_KERNELS environment variable (scalar|avx2) or
// select_backend() overrides the choice.

#include <cstddef>
#include <string_view>

namespace p2s::kernels {

enum class Backend { Scalar, Avx2 };

enum class Trans { No, Yes };

/// C = alpha * op(A) * op(B) + beta * C, row-major. op(A) is M x K and
/// op(B) is K x N. When beta == 0 the previous contents of C are ignored.
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                        double alpha, const double* a, std::size_t lda, const double* b,
                        std::size_t ldb, double beta, double* c, std::size_t ldc);

struct KernelTable {
  Backend backend;
  GemmFn gemm;
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // z = x + y, z may alias x or y
  void (*add)(std::size_t n, const double* x, const double* y, double* z);
  // z = x * y elementwise, z may alias x or y
  void (*mul)(std::size_t n, const double* x, const double* y, double* z);
  // x *= a
  void (*scale)(std::size_t n, double a, double* x);
  double (*dot)(std::size_t n, const double* x, const double* y);
  double (*sum)(std::size_t n, const double* x);
};

const KernelTable& scalar_table();

/// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

/// Kernel table in use for this process.
const KernelTable& active();

/// Switches backends. Throws std::invalid_argument if the requested backend
/// is unavailable on this machine.
void select_backend(Backend b);

bool backend_available(Backend b);

std::string_view backend_name(Backend b);

}  // namespace p2s::kernels
