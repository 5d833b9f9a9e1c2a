#include "hjam/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace hjam::kernels {

const KernelTable* avx2() {
#if defined(HJAM_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("HJAM_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar();
    if (const KernelTable* wide = avx2()) return *wide;
    return scalar();
  }();
  return chosen;
}

}  // namespace hjam::kernels
