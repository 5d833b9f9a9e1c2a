// Compiled with -mavx2 -mfma. Nothing here may run before dispatch has
// confirmed CPU support.

#include "hjam/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace hjam::kernels {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double gather_dot_avx2(const double* w, const std::uint32_t* idx, std::size_t n,
                       const double* v) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + j));
    const __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + j + 4));
    // Indices are below 2^31 (state counts are capped well under that).
    const __m256d g0 = _mm256_i32gather_pd(v, i0, 8);
    const __m256d g1 = _mm256_i32gather_pd(v, i1, 8);
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), g0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + j + 4), g1, acc1);
  }
  for (; j + 4 <= n; j += 4) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + j));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), _mm256_i32gather_pd(v, i0, 8), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; j < n; ++j) acc += w[j] * v[idx[j]];
  return acc;
}

MinMax diff_minmax_avx2(const double* next, const double* prev, std::size_t n) {
  std::size_t j = 0;
  MinMax out{next[0] - prev[0], next[0] - prev[0]};
  if (n >= 4) {
    __m256d lo = _mm256_sub_pd(_mm256_loadu_pd(next), _mm256_loadu_pd(prev));
    __m256d hi = lo;
    for (j = 4; j + 4 <= n; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(next + j), _mm256_loadu_pd(prev + j));
      lo = _mm256_min_pd(lo, d);
      hi = _mm256_max_pd(hi, d);
    }
    alignas(32) double l[4];
    alignas(32) double h[4];
    _mm256_store_pd(l, lo);
    _mm256_store_pd(h, hi);
    out.min = std::min({l[0], l[1], l[2], l[3]});
    out.max = std::max({h[0], h[1], h[2], h[3]});
  }
  for (; j < n; ++j) {
    const double d = next[j] - prev[j];
    out.min = std::min(out.min, d);
    out.max = std::max(out.max, d);
  }
  return out;
}

void subtract_scalar_avx2(double* v, std::size_t n, double c) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) _mm256_storeu_pd(v + j, _mm256_sub_pd(_mm256_loadu_pd(v + j), cv));
  for (; j < n; ++j) v[j] -= c;
}

}  // namespace

namespace detail {
const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", gather_dot_avx2, diff_minmax_avx2, subtract_scalar_avx2};
  return table;
}
}  // namespace detail

}  // namespace hjam::kernels
