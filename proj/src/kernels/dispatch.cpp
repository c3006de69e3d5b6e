#include <cstdlib>
#include <string_view>
#include <vector>

#include "intel_latent/kernels.hpp"
#include "kernels_internal.hpp"

namespace intel_latent::kernels {

namespace detail {

double* scratch(int slot, std::size_t n) {
  thread_local std::vector<double> buffers[2];
  auto& buf = buffers[slot];
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

}  // namespace detail

const KernelTable* avx2_table() {
#if defined(INTEL_LATENT_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* forced = std::getenv("INTEL_LATENT_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return table;
}

}  // namespace intel_latent::kernels
