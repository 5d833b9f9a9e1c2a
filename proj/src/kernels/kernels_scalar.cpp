#include "hjam/kernels.hpp"

#include <algorithm>

namespace hjam::kernels {
namespace {

double gather_dot_scalar(const double* w, const std::uint32_t* idx, std::size_t n,
                         const double* v) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += w[j] * v[idx[j]];
  return acc;
}

MinMax diff_minmax_scalar(const double* next, const double* prev, std::size_t n) {
  MinMax out{next[0] - prev[0], next[0] - prev[0]};
  for (std::size_t j = 1; j < n; ++j) {
    const double d = next[j] - prev[j];
    out.min = std::min(out.min, d);
    out.max = std::max(out.max, d);
  }
  return out;
}

void subtract_scalar_scalar(double* v, std::size_t n, double c) {
  for (std::size_t j = 0; j < n; ++j) v[j] -= c;
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", gather_dot_scalar, diff_minmax_scalar,
                                 subtract_scalar_scalar};
  return table;
}

}  // namespace hjam::kernels
