#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dgcrf/kernels.hpp"
#include "dgcrf/rng.hpp"

using namespace dgcrf;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  GaussianSource rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> spd(std::size_t n, std::uint64_t seed) {
  const auto r = random_vec(n * n, seed);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) a[i * n + j] += r[i * n + k] * r[j * n + k];
      if (i == j) a[i * n + j] += 0.5;
    }
  return a;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// C += op(A) B written out element by element.
std::vector<double> naive_gemm(bool trans, std::size_t m, std::size_t n, std::size_t k, const std::vector<double>& a,
                               std::size_t lda, const std::vector<double>& b, std::size_t ldb, std::vector<double> c,
                               std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += (trans ? a[p * lda + i] : a[i * lda + p]) * b[p * ldb + j];
      c[i * ldc + j] += acc;
    }
  return c;
}

}  // namespace

TEST_CASE("scalar small dense kernels match naive definitions") {
  for (std::size_t n : {1u, 2u, 5u, 9u, 25u}) {
    const auto a = spd(n, 40 + n);
    auto l = a;
    REQUIRE(kernels::scalar::cholesky(l.data(), n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (j > i) CHECK(l[i * n + j] == 0.0);
        double llt = 0.0;
        for (std::size_t k = 0; k < n; ++k) llt += l[i * n + k] * l[j * n + k];
        CHECK(std::abs(llt - a[i * n + j]) <= 1e-12 * (1.0 + std::abs(a[i * n + j])));
      }
    const auto rhs = random_vec(n, 3 + n);
    auto x = rhs;
    kernels::scalar::trsv_lower(l.data(), x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      double lx = 0.0;
      for (std::size_t k = 0; k <= i; ++k) lx += l[i * n + k] * x[k];
      CHECK(std::abs(lx - rhs[i]) <= 1e-11 * (1.0 + std::abs(rhs[i])));
    }
    x = rhs;
    kernels::scalar::trsv_lower_transposed(l.data(), x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      double ltx = 0.0;
      for (std::size_t k = i; k < n; ++k) ltx += l[k * n + i] * x[k];
      CHECK(std::abs(ltx - rhs[i]) <= 1e-11 * (1.0 + std::abs(rhs[i])));
    }
    std::vector<double> y(n);
    kernels::scalar::gemv(a.data(), rhs.data(), y.data(), n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double ref = 0.0;
      for (std::size_t k = 0; k < n; ++k) ref += a[i * n + k] * rhs[k];
      CHECK(y[i] == doctest::Approx(ref).epsilon(1e-13));
    }
    auto g = a;
    kernels::scalar::ger(0.25, rhs.data(), y.data(), g.data(), n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(g[i * n + j] == a[i * n + j] + 0.25 * rhs[i] * y[j]);
  }
  std::vector<double> indefinite = {1.0, 2.0, 2.0, 1.0};
  CHECK_FALSE(kernels::scalar::cholesky(indefinite.data(), 2));
}

TEST_CASE("scalar gemm matches naive triple loop with strides") {
  for (bool trans : {false, true}) {
    const std::size_t m = 7, n = 11, k = 5, lda = trans ? m + 2 : k + 3, ldb = n + 1, ldc = n + 4;
    const auto a = random_vec((trans ? k : m) * lda, 11), b = random_vec(k * ldb, 12), c = random_vec(m * ldc, 13);
    auto got = c;
    kernels::scalar::gemm(trans, m, n, k, a.data(), lda, b.data(), ldb, got.data(), ldc);
    CHECK(max_diff(got, naive_gemm(trans, m, n, k, a, lda, b, ldb, c, ldc)) <= 1e-13);
  }
}

TEST_CASE("scalar kernels match naive loops") {
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 100u}) {
    const auto a = random_vec(n, 1 + n), b = random_vec(n, 100 + n);
    double ref = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i], s += a[i];
    CHECK(kernels::scalar::dot(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(kernels::scalar::sum(a.data(), n) == doctest::Approx(s).epsilon(1e-14));
    auto y = b;
    kernels::scalar::axpy(0.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == b[i] + 0.5 * a[i]);
  }
}

#ifdef DGCRF_HAVE_AVX2
TEST_CASE("avx2 kernels agree with scalar reference") {
  if (!kernels::backend_available(kernels::Backend::Avx2)) return;
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vec(n, 7 + n), b = random_vec(n, 900 + n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(kernels::avx2::dot(a.data(), b.data(), n) - kernels::scalar::dot(a.data(), b.data(), n)) <=
          1e-14 * (mag + 1.0));
    CHECK(std::abs(kernels::avx2::sum(a.data(), n) - kernels::scalar::sum(a.data(), n)) <= 1e-13 * (n + 1.0));
    auto y1 = b, y2 = b;
    kernels::avx2::axpy(-1.7, a.data(), y1.data(), n);
    kernels::scalar::axpy(-1.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y2[i]) + 1.0));
    auto s1 = a, s2 = a;
    kernels::avx2::scale(3.25, s1.data(), n);
    kernels::scalar::scale(3.25, s2.data(), n);
    CHECK(s1 == s2);
  }
}

TEST_CASE("avx2 small dense kernels agree with scalar reference") {
  if (!kernels::backend_available(kernels::Backend::Avx2)) return;
  for (std::size_t n = 1; n < 30; ++n) {
    const auto a = spd(n, 500 + n);
    auto l1 = a, l2 = a;
    REQUIRE(kernels::avx2::cholesky(l1.data(), n));
    REQUIRE(kernels::scalar::cholesky(l2.data(), n));
    CHECK(max_diff(l1, l2) <= 1e-12 * (1.0 + n));
    const auto rhs = random_vec(n, 600 + n);
    auto x1 = rhs, x2 = rhs;
    kernels::avx2::trsv_lower(l2.data(), x1.data(), n);
    kernels::scalar::trsv_lower(l2.data(), x2.data(), n);
    CHECK(max_diff(x1, x2) <= 1e-11);
    x1 = rhs, x2 = rhs;
    kernels::avx2::trsv_lower_transposed(l2.data(), x1.data(), n);
    kernels::scalar::trsv_lower_transposed(l2.data(), x2.data(), n);
    CHECK(max_diff(x1, x2) <= 1e-11);
    for (std::size_t m : {1u, 3u, 4u, 9u}) {
      const auto r = random_vec(m * n, 700 + n + m);
      std::vector<double> y1(m), y2(m);
      kernels::avx2::gemv(r.data(), rhs.data(), y1.data(), m, n);
      kernels::scalar::gemv(r.data(), rhs.data(), y2.data(), m, n);
      CHECK(max_diff(y1, y2) <= 1e-13 * (1.0 + n));
      auto g1 = r, g2 = r;
      kernels::avx2::ger(-0.7, y1.data(), rhs.data(), g1.data(), m, n);
      kernels::scalar::ger(-0.7, y1.data(), rhs.data(), g2.data(), m, n);
      CHECK(max_diff(g1, g2) <= 1e-13 * (1.0 + n));
    }
  }
}

TEST_CASE("avx2 gemm agrees with scalar reference on ragged shapes") {
  if (!kernels::backend_available(kernels::Backend::Avx2)) return;
  for (bool trans : {false, true})
    for (std::size_t m : {1u, 3u, 4u, 6u, 17u})
      for (std::size_t n : {1u, 4u, 5u, 8u, 13u, 25u})
        for (std::size_t k : {0u, 1u, 7u, 16u}) {
          const std::size_t lda = (trans ? m : k) + 1, ldb = n + 2, ldc = n + 3;
          const auto a = random_vec((trans ? k : m) * lda + 1, m + 10 * n + 100 * k);
          const auto b = random_vec(k * ldb + 1, 7 + m + n + k);
          const auto c = random_vec(m * ldc, 99 + m);
          auto c1 = c, c2 = c;
          kernels::avx2::gemm(trans, m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc);
          kernels::scalar::gemm(trans, m, n, k, a.data(), lda, b.data(), ldb, c2.data(), ldc);
          CHECK(max_diff(c1, c2) <= 1e-13 * (1.0 + k));
        }
}
#endif

TEST_CASE("backend selection") {
  const auto prev = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  if (!kernels::backend_available(kernels::Backend::Avx2)) {
    CHECK_THROWS_AS(kernels::set_backend(kernels::Backend::Avx2), std::invalid_argument);
  }
  kernels::set_backend(prev);
}
