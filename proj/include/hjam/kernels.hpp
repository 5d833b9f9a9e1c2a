#pragma once

// Inner-loop arithmetic for the dynamic-programming sweeps. A portable scalar
// implementation is always present; an AVX2 variant is compiled into its own
// translation unit and picked at runtime when the CPU supports it.

#include <cstddef>
#include <cstdint>
#include <span>

namespace hjam::kernels {

struct MinMax {
  double min;
  double max;
};

struct KernelTable {
  const char* name;
  /// sum_j weights[j] * values[index[j]]
  double (*gather_dot)(const double* weights, const std::uint32_t* index, std::size_t n,
                       const double* values);
  /// min and max of (next[j] - prev[j]); n >= 1
  MinMax (*diff_minmax)(const double* next, const double* prev, std::size_t n);
  /// v[j] -= c
  void (*subtract_scalar)(double* v, std::size_t n, double c);
};

const KernelTable& scalar();

/// nullptr when the AVX2 unit was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2();

/// The variant used by the solvers. Honors HJAM_KERNELS=scalar|avx2 in the
/// environment; otherwise the widest supported variant.
const KernelTable& active();

inline double gather_dot(std::span<const double> weights, std::span<const std::uint32_t> index,
                         const double* values) {
  return active().gather_dot(weights.data(), index.data(), weights.size(), values);
}

inline MinMax diff_minmax(std::span<const double> next, std::span<const double> prev) {
  return active().diff_minmax(next.data(), prev.data(), next.size());
}

inline void subtract_scalar(std::span<double> v, double c) {
  active().subtract_scalar(v.data(), v.size(), c);
}

namespace detail {
const KernelTable& avx2_table();
}

}  // namespace hjam::kernels
