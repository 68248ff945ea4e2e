#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "p2s/kernels/kernels.hpp"

namespace p2s::kernels {

namespace detail {
const KernelTable* avx2_table_compiled();
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  const KernelTable* avx = avx2_table();
  if (const char* env = std::getenv("P2S_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx != nullptr) return avx;
  }
  return avx != nullptr ? avx : &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable* t = cpu_has_avx2() ? detail::avx2_table_compiled() : nullptr;
  return t;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool backend_available(Backend b) { return b == Backend::Scalar || avx2_table() != nullptr; }

void select_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(b)) +
                                "' is not available on this CPU");
  }
  slot().store(b == Backend::Scalar ? &scalar_table() : avx2_table(), std::memory_order_release);
}

std::string_view backend_name(Backend b) { return b == Backend::Scalar ? "scalar" : "avx2"; }

}  // namespace p2s::kernels
