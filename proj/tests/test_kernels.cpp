#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "intel_latent/kernels.hpp"
#include "intel_latent/rng.hpp"

using namespace intel_latent;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol).scale(1.0));
  }
}

// Naive triple loop, independent of both tables.
std::vector<double> reference_gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
                                   const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta ? a[p * m + i] : a[i * k + p];
        const double bv = tb ? b[j * k + p] : b[p * n + j];
        s += av * bv;
      }
      c[i * n + j] = s;
    }
  return c;
}

}  // namespace

TEST_CASE("scalar gemm matches the reference loop") {
  Rng rng(1);
  const auto& t = kernels::scalar_table();
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      const std::size_t m = 7, n = 5, k = 9;
      auto a = random_vector(rng, m * k);
      auto b = random_vector(rng, k * n);
      std::vector<double> c(m * n, 0.0);
      t.gemm(ta, tb, m, n, k, a.data(), b.data(), c.data(), false);
      check_close(c, reference_gemm(ta, tb, m, n, k, a, b), 1e-13);
    }
}

TEST_CASE("gemm accumulate adds into C") {
  const auto& t = kernels::scalar_table();
  std::vector<double> a{1, 2, 3, 4}, b{1, 0, 0, 1}, c{10, 10, 10, 10};
  t.gemm(false, false, 2, 2, 2, a.data(), b.data(), c.data(), true);
  CHECK(c == std::vector<double>{11, 12, 13, 14});
}

TEST_CASE("scalar pairwise distance sum by hand") {
  const auto& t = kernels::scalar_table();
  std::vector<double> a{0, 0, 3, 4}, b{0, 0};
  CHECK(t.pairwise_distance_sum(a.data(), 2, b.data(), 1, 2) == doctest::Approx(5.0));
}

TEST_CASE("avx2 table agrees with scalar") {
  const auto* avx = kernels::avx2_table();
  if (avx == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
    return;
  }
  const auto& s = kernels::scalar_table();
  Rng rng(7);
  // Odd lengths exercise the vector tails.
  for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    auto x = random_vector(rng, n);
    auto y = random_vector(rng, n);
    std::vector<double> o1(n), o2(n);
    s.add(x.data(), y.data(), o1.data(), n);
    avx->add(x.data(), y.data(), o2.data(), n);
    CHECK(o1 == o2);
    s.sub(x.data(), y.data(), o1.data(), n);
    avx->sub(x.data(), y.data(), o2.data(), n);
    CHECK(o1 == o2);
    s.mul(x.data(), y.data(), o1.data(), n);
    avx->mul(x.data(), y.data(), o2.data(), n);
    CHECK(o1 == o2);
    s.scale(1.7, x.data(), o1.data(), n);
    avx->scale(1.7, x.data(), o2.data(), n);
    CHECK(o1 == o2);
    auto y1 = y, y2 = y;
    s.axpy(-0.3, x.data(), y1.data(), n);
    avx->axpy(-0.3, x.data(), y2.data(), n);
    check_close(y1, y2, 1e-14);
    CHECK(avx->dot(x.data(), y.data(), n) == doctest::Approx(s.dot(x.data(), y.data(), n)).epsilon(1e-12));
    CHECK(avx->sum(x.data(), n) == doctest::Approx(s.sum(x.data(), n)).epsilon(1e-12));
  }
  for (bool ta : {false, true})
    for (bool tb : {false, true})
      for (auto [m, n, k] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 5, 7}, {10, 10, 10}, {33, 17, 9}}) {
        auto a = random_vector(rng, m * k);
        auto b = random_vector(rng, k * n);
        std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
        s.gemm(ta, tb, m, n, k, a.data(), b.data(), c1.data(), true);
        avx->gemm(ta, tb, m, n, k, a.data(), b.data(), c2.data(), true);
        check_close(c1, c2, 1e-12);
      }
  for (std::size_t dim : {1u, 2u, 3u, 5u}) {
    auto a = random_vector(rng, 37 * dim);
    auto b = random_vector(rng, 23 * dim);
    const double r1 = s.pairwise_distance_sum(a.data(), 37, b.data(), 23, dim);
    const double r2 = avx->pairwise_distance_sum(a.data(), 37, b.data(), 23, dim);
    CHECK(r2 == doctest::Approx(r1).epsilon(1e-12));
  }
}

TEST_CASE("active table is stable") {
  const auto& a = kernels::active();
  CHECK(&a == &kernels::active());
  CHECK(!a.name.empty());
}
