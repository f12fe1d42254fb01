#include <doctest.h>

#include <cmath>

#include "dgcrf/dense.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;

TEST_CASE("cholesky solve reproduces the right-hand side") {
  for (std::size_t n : {1u, 2u, 4u, 9u, 25u, 64u}) {
    const Matrix a = random_spd(n, 10 + n, 0.05, 3.0);
    const auto chol = Cholesky::factor(a);
    REQUIRE(chol.has_value());
    CHECK(is_lower_triangular(chol->lower()));
    CHECK(max_abs_diff(gram(chol->lower()), a) < 1e-12);
    const auto b = random_vector(n, 99 + n);
    const auto x = chol->solve(b);
    const auto ax = a * std::span<const double>(x);
    CHECK(max_abs(ax, b) < 1e-11);
    CHECK(max_abs(x, naive_solve(a, b)) < 1e-9);
  }
}

TEST_CASE("cholesky log determinant matches eigenvalues") {
  const Matrix a = random_spd(6, 3, 0.2, 5.0);
  double ref = 0.0;
  for (double l : symmetric_eigenvalues(a)) ref += std::log(l);
  CHECK(Cholesky::factor(a)->log_det() == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("cholesky rejects indefinite and non-finite input") {
  Matrix a = Matrix::identity(3);
  a(1, 1) = -1.0;
  CHECK_FALSE(Cholesky::factor(a).has_value());
  a(1, 1) = std::nan("");
  CHECK_FALSE(Cholesky::factor(a).has_value());
}

TEST_CASE("raw triangular solves") {
  const Matrix a = random_spd(5, 42, 0.5, 2.0);
  Matrix l = a;
  REQUIRE(cholesky_in_place(l.data(), 5));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(l(i, j) == 0.0);
  auto b = random_vector(5, 1);
  auto x = b;
  solve_lower_in_place(l.data(), x.data(), 5);
  solve_lower_transposed_in_place(l.data(), x.data(), 5);
  CHECK(max_abs(x, naive_solve(a, b)) < 1e-12);
}

TEST_CASE("symmetric eigenvalues of a known matrix") {
  Matrix a(2, 2);
  a(0, 0) = 2, a(0, 1) = 1, a(1, 0) = 1, a(1, 1) = 2;
  const auto ev = symmetric_eigenvalues(a);
  CHECK(ev[0] == doctest::Approx(1.0));
  CHECK(ev[1] == doctest::Approx(3.0));
}

TEST_CASE("matrix products and helpers") {
  Matrix a(2, 3), b(3, 2);
  for (std::size_t i = 0; i < 6; ++i) a.flat()[i] = static_cast<double>(i + 1), b.flat()[i] = static_cast<double>(6 - i);
  const Matrix c = a * b;
  CHECK(c(0, 0) == 1 * 6 + 2 * 4 + 3 * 2);
  CHECK(c(1, 1) == 4 * 5 + 5 * 3 + 6 * 1);
  CHECK(a.transposed()(2, 1) == a(1, 2));
  CHECK(frobenius_norm(Matrix::identity(4)) == doctest::Approx(2.0));
}
