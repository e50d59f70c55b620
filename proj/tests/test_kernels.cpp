#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gmvp/kernels.hpp"
#include "gmvp/rng.hpp"

namespace gk = gmvp::kernels;

namespace {

std::vector<double> random_vec(gmvp::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

void naive_gemm_nn(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Sizes straddle the 4-wide vector width and its remainders.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 31, 33};

}  // namespace

TEST(Kernels, ScalarGemmMatchesNaiveLoop) {
  gmvp::Rng rng(1);
  const auto& t = gk::scalar_table();
  for (std::size_t m : {1, 3, 5}) {
    for (std::size_t k : kSizes) {
      for (std::size_t n : {1, 4, 6, 9}) {
        const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
        std::vector<double> c1 = random_vec(rng, m * n), c2 = c1;
        t.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
        naive_gemm_nn(a, b, c2, m, k, n);
        EXPECT_LT(max_diff(c1, c2), 1e-12);
      }
    }
  }
}

TEST(Kernels, TransposedGemmsAgreeWithNn) {
  gmvp::Rng rng(2);
  const auto& t = gk::scalar_table();
  const std::size_t m = 5, k = 7, n = 3;
  const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
  std::vector<double> at(k * m), bt(n * k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  std::vector<double> ref(m * n, 0.0), nt(m * n, 0.0), tn(m * n, 0.0);
  t.gemm_nn(a.data(), b.data(), ref.data(), m, k, n);
  t.gemm_nt(a.data(), bt.data(), nt.data(), m, k, n);
  t.gemm_tn(at.data(), b.data(), tn.data(), m, k, n);
  EXPECT_LT(max_diff(ref, nt), 1e-12);
  EXPECT_LT(max_diff(ref, tn), 1e-12);
}

TEST(Kernels, Avx2MatchesScalar) {
  const gk::KernelTable* v = gk::avx2_table();
  if (v == nullptr) GTEST_SKIP() << "AVX2 variant unavailable on this machine";
  const auto& s = gk::scalar_table();
  gmvp::Rng rng(3);
  for (std::size_t n : kSizes) {
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    EXPECT_NEAR(v->dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), 1e-12);
    std::vector<double> y1 = random_vec(rng, n), y2 = y1;
    v->axpy(0.7, a.data(), y1.data(), n);
    s.axpy(0.7, a.data(), y2.data(), n);
    EXPECT_LT(max_diff(y1, y2), 1e-14);
    std::vector<double> o1(n), o2(n);
    v->add(a.data(), b.data(), o1.data(), n);
    s.add(a.data(), b.data(), o2.data(), n);
    EXPECT_EQ(o1, o2);
    v->sub(a.data(), b.data(), o1.data(), n);
    s.sub(a.data(), b.data(), o2.data(), n);
    EXPECT_EQ(o1, o2);
    v->mul(a.data(), b.data(), o1.data(), n);
    s.mul(a.data(), b.data(), o2.data(), n);
    EXPECT_EQ(o1, o2);
  }
  for (std::size_t m : {1, 2, 5, 8}) {
    for (std::size_t k : kSizes) {
      for (std::size_t n : {1, 3, 4, 5, 8, 13}) {
        const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
        const auto bt = random_vec(rng, n * k), at = random_vec(rng, k * m);
        std::vector<double> c1 = random_vec(rng, m * n), c2 = c1;
        v->gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
        s.gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
        EXPECT_LT(max_diff(c1, c2), 1e-12);
        v->gemm_nt(a.data(), bt.data(), c1.data(), m, k, n);
        s.gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
        EXPECT_LT(max_diff(c1, c2), 1e-12);
        v->gemm_tn(at.data(), b.data(), c1.data(), m, k, n);
        s.gemm_tn(at.data(), b.data(), c2.data(), m, k, n);
        EXPECT_LT(max_diff(c1, c2), 1e-12);
      }
    }
  }
}

TEST(Kernels, SelectionRoundTrip) {
  const std::string before = gk::active().name;
  ASSERT_TRUE(gk::select("scalar"));
  EXPECT_STREQ(gk::active().name, "scalar");
  EXPECT_FALSE(gk::select("bogus"));
  EXPECT_STREQ(gk::active().name, "scalar");
  EXPECT_TRUE(gk::select("auto"));
  EXPECT_EQ(gk::available().front(), &gk::scalar_table());
  gk::select(before);
}
