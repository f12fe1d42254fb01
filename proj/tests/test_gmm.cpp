#include <doctest.h>

#include <cmath>

#include "dgcrf/errors.hpp"
#include "dgcrf/gmm.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;

namespace {

// N samples from a zero-mean Gaussian with covariance C (on the centered
// subspace when C is), via its symmetric eigen-free Cholesky with jitter.
void sample(const Matrix& C, std::size_t N, GaussianSource& rng, std::vector<double>& out) {
  const std::size_t n = C.rows();
  Matrix J = C;
  for (std::size_t i = 0; i < n; ++i) J(i, i) += 1e-12;
  const Matrix L = Cholesky::factor(J)->lower();
  std::vector<double> e(n);
  for (std::size_t s = 0; s < N; ++s) {
    for (double& v : e) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0.0;
      for (std::size_t j = 0; j <= i; ++j) x += L(i, j) * e[j];
      out.push_back(x);
    }
  }
}

Matrix project(const Matrix& C) {
  const Matrix G = centering(C.rows());
  return G * C * G;
}

}  // namespace

TEST_CASE("single component equals the sample covariance") {
  const std::size_t n = 4;
  GaussianSource rng(3);
  std::vector<double> x;
  sample(project(random_spd(n, 1, 0.1, 2.0)), 3000, rng, x);
  GmmOptions opt;
  opt.K = 1;
  opt.em_iters = 3;
  const auto fit = fit_zero_mean_gmm(x, n, opt);
  Matrix S(n, n);
  for (std::size_t s = 0; s < 3000; ++s) {
    const auto c = mean_subtract(std::span<const double>(x.data() + s * n, n)).centered;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) S(i, j) += c[i] * c[j] / 3000.0;
  }
  // MAP step with one pseudo-observation: relative offset 1/(N+1).
  CHECK(max_abs_diff(fit.covariances[0], S) < 2e-3 * frobenius_norm(S));
  CHECK(fit.weights[0] == doctest::Approx(1.0));

  const auto bank = gmm_init(x, 2, opt, 0.01);
  const Matrix W = bank.w(0);
  Matrix expect = fit.covariances[0];
  for (std::size_t i = 0; i < n; ++i) expect(i, i) += opt.ridge;
  CHECK(max_abs_diff(W, expect) < 1e-10);
  CHECK(bank.psi(0) == W);
  const double logdet = Cholesky::factor([&] {
                          Matrix a = W;
                          for (std::size_t i = 0; i < n; ++i) a(i, i) += 0.01;
                          return a;
                        }())->log_det();
  CHECK(bank.biases[0] == doctest::Approx(-0.5 * logdet));
}

TEST_CASE("two-component mixture is recovered") {
  const std::size_t n = 4;
  // Two strongly different structures: horizontal vs vertical gradients.
  Matrix A(n, n), B(n, n);
  const double h[] = {-1, 1, -1, 1}, v[] = {-1, -1, 1, 1}, d[] = {1, -1, -1, 1};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      A(i, j) = 1.0 * h[i] * h[j] + 0.05 * v[i] * v[j] + 0.02 * d[i] * d[j];
      B(i, j) = 0.05 * h[i] * h[j] + 1.0 * v[i] * v[j] + 0.02 * d[i] * d[j];
    }
  GaussianSource rng(9);
  std::vector<double> x;
  sample(A, 6000, rng, x);
  sample(B, 4000, rng, x);
  GmmOptions opt;
  opt.K = 2;
  opt.em_iters = 60;
  opt.seed = 4;
  const auto fit = fit_zero_mean_gmm(x, n, opt);
  auto diff = [](const Matrix& a, const Matrix& b) {
    Matrix m = a;
    for (std::size_t i = 0; i < m.size(); ++i) m.flat()[i] -= b.flat()[i];
    return frobenius_norm(m) / frobenius_norm(b);
  };
  const int ia = diff(fit.covariances[0], A) < diff(fit.covariances[1], A) ? 0 : 1;
  CHECK(diff(fit.covariances[ia], A) < 0.10);
  CHECK(diff(fit.covariances[1 - ia], B) < 0.10);
  CHECK(fit.weights[ia] == doctest::Approx(0.6).epsilon(0.05));

  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-9 * std::abs(fit.log_likelihood[i - 1]));
  }
  CHECK(fit_zero_mean_gmm(x, n, opt).covariances == fit.covariances);
}

TEST_CASE("gmm init requires a large enough corpus") {
  const std::vector<double> tiny(4 * 50, 0.1);
  GmmOptions opt;
  opt.K = 2;
  CHECK_THROWS_WITH_AS(gmm_init(tiny, 2, opt, 0.01), doctest::Contains("at least 80"), ParameterError);
}

TEST_CASE("random init") {
  const auto zero = random_init(3, 2, 1, 0.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(zero.w(k) == Matrix::identity(4));
    CHECK(zero.psi(k) == Matrix::identity(4));
    CHECK(zero.biases[k] == 0.0);
  }
  const auto a = random_init(4, 3, 7, 0.3), b = random_init(4, 3, 7, 0.3);
  CHECK(a == b);
  CHECK_NOTHROW(a.validate());
  for (int k = 0; k < 4; ++k) CHECK(symmetric_eigenvalues(a.w(k)).front() > 0.0);
}
