#include "hjam/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace hjam::kernels;

namespace {

struct Data {
  std::vector<double> w;
  std::vector<std::uint32_t> idx;
  std::vector<double> values;
  std::vector<double> a;
  std::vector<double> b;
};

Data make(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Data d;
  d.values.resize(1000);
  for (auto& v : d.values) v = u(rng);
  for (std::size_t j = 0; j < n; ++j) {
    d.w.push_back(std::abs(u(rng)));
    d.idx.push_back(static_cast<std::uint32_t>(rng() % d.values.size()));
    d.a.push_back(u(rng));
    d.b.push_back(u(rng));
  }
  return d;
}

}  // namespace

TEST(Kernels, ScalarByHand) {
  const double values[] = {10.0, 20.0, 30.0, 40.0};
  const double w[] = {0.25, 0.5, 0.25};
  const std::uint32_t idx[] = {3, 0, 2};
  EXPECT_DOUBLE_EQ(scalar().gather_dot(w, idx, 3, values), 10.0 + 5.0 + 7.5);
  EXPECT_DOUBLE_EQ(scalar().gather_dot(w, idx, 0, values), 0.0);

  const double next[] = {1.0, 5.0, -2.0};
  const double prev[] = {0.5, 1.0, 0.0};
  const auto mm = scalar().diff_minmax(next, prev, 3);
  EXPECT_DOUBLE_EQ(mm.min, -2.0);
  EXPECT_DOUBLE_EQ(mm.max, 4.0);

  double v[] = {1.0, 2.0, 3.0};
  scalar().subtract_scalar(v, 3, 1.5);
  EXPECT_DOUBLE_EQ(v[0], -0.5);
  EXPECT_DOUBLE_EQ(v[2], 1.5);
}

TEST(Kernels, ActiveIsAKnownVariant) {
  const KernelTable& k = active();
  EXPECT_TRUE(&k == &scalar() || &k == avx2());
}

TEST(Kernels, Avx2MatchesScalar) {
  const KernelTable* v = avx2();
  if (!v) GTEST_SKIP() << "AVX2 variant not available on this machine";
  for (std::size_t n = 0; n < 70; ++n) {
    const Data d = make(n, 1000 + n);
    const double ref = scalar().gather_dot(d.w.data(), d.idx.data(), n, d.values.data());
    const double got = v->gather_dot(d.w.data(), d.idx.data(), n, d.values.data());
    // Different summation order; relative rounding only.
    EXPECT_NEAR(got, ref, 1e-12 * (1.0 + std::abs(ref))) << "n=" << n;

    if (n > 0) {
      const auto r = scalar().diff_minmax(d.a.data(), d.b.data(), n);
      const auto g = v->diff_minmax(d.a.data(), d.b.data(), n);
      EXPECT_EQ(r.min, g.min) << "n=" << n;
      EXPECT_EQ(r.max, g.max) << "n=" << n;
    }

    std::vector<double> x = d.a;
    std::vector<double> y = d.a;
    scalar().subtract_scalar(x.data(), n, 0.75);
    v->subtract_scalar(y.data(), n, 0.75);
    EXPECT_EQ(x, y);
  }
}

TEST(Kernels, Avx2HandlesHighIndices) {
  const KernelTable* v = avx2();
  if (!v) GTEST_SKIP() << "AVX2 variant not available on this machine";
  std::vector<double> values(3'000'000);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i % 97);
  const std::vector<std::uint32_t> idx{2'999'999, 0, 2'500'000, 1'234'567, 17, 2'999'998};
  const std::vector<double> w{0.1, 0.2, 0.3, 0.15, 0.05, 0.2};
  EXPECT_NEAR(v->gather_dot(w.data(), idx.data(), idx.size(), values.data()),
              scalar().gather_dot(w.data(), idx.data(), idx.size(), values.data()), 1e-12);
}
