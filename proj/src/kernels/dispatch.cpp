#include <cstdlib>
#include <string_view>

#include "dca/kernels.hpp"

namespace dca::kernels {

#if defined(DCA_HAVE_AVX2)
const KernelTable& avx2_table_impl() noexcept;
#endif

const KernelTable* avx2_table() noexcept {
#if defined(DCA_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("DCA_SIMD");
    const bool force_scalar = env != nullptr && std::string_view(env) == "scalar";
    const KernelTable* simd = avx2_table();
    return (simd != nullptr && !force_scalar) ? *simd : scalar_table();
  }();
  return chosen;
}

}  // namespace dca::kernels
