#include <doctest.h>

#include <cmath>

#include "dgcrf/lbfgs.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;

TEST_CASE("convex quadratic in 50 dimensions") {
  const std::size_t n = 50;
  const Matrix A = random_spd(n, 1, 0.5, 20.0);
  const auto xstar = random_vector(n, 2);
  auto f = [&](std::span<const double> x, std::span<double> g) {
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = x[i] - xstar[i];
    const auto Ae = A * std::span<const double>(e);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = Ae[i];
      v += 0.5 * e[i] * Ae[i];
    }
    return v;
  };
  LbfgsOptions opt;
  opt.max_iters = 60;
  opt.value_tol = 0.0;
  const auto res = lbfgs_minimize(f, std::vector<double>(n, 0.0), opt);
  CHECK(res.status == LbfgsStatus::GradientTolerance);
  CHECK(res.iterations <= 60);
  CHECK(inf_norm(res.grad) < 1e-8);
  CHECK(max_abs(res.x, xstar) < 1e-7);
}

TEST_CASE("quadratic with a large constant stops cleanly at the rounding floor") {
  // f* = −5: gradients below ~1e-8 change f by less than one ulp.
  const std::size_t n = 50;
  const Matrix A = random_spd(n, 1, 0.5, 20.0);
  const auto b = random_vector(n, 2);
  auto f = [&](std::span<const double> x, std::span<double> g) {
    const auto Ax = A * x;
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = Ax[i] - b[i];
      v += 0.5 * x[i] * Ax[i] - b[i] * x[i];
    }
    return v;
  };
  LbfgsOptions opt;
  opt.max_iters = 100;
  opt.value_tol = 0.0;
  const auto res = lbfgs_minimize(f, std::vector<double>(n, 0.0), opt);
  CHECK(inf_norm(res.grad) < 1e-7);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    if (res.trace[i].line_search_ok) CHECK(res.trace[i].value <= res.trace[i - 1].value);
  }
}

TEST_CASE("rosenbrock from the classical start") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsOptions opt;
  opt.max_iters = 200;
  opt.grad_tol = 1e-10;
  opt.value_tol = 0.0;
  const auto res = lbfgs_minimize(f, {-1.2, 1.0}, opt);
  CHECK(std::abs(res.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(res.x[1] - 1.0) < 1e-6);
  // Every successful step decreases the objective.
  double prev = 24.2;
  for (const auto& it : res.trace) {
    if (it.line_search_ok) CHECK(it.value <= prev);
    prev = it.value;
  }
}

TEST_CASE("stationary start takes no iterations") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  const auto res = lbfgs_minimize(f, {0.0}, LbfgsOptions{});
  CHECK(res.iterations == 0);
  CHECK(res.status == LbfgsStatus::GradientTolerance);
  CHECK(res.trace.empty());
}

TEST_CASE("a wrong gradient ends in a flagged line-search failure") {
  // Gradient sign flipped: every search direction is uphill.
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = -2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const auto res = lbfgs_minimize(f, {0.0}, LbfgsOptions{});
  CHECK(res.status == LbfgsStatus::LineSearchFailed);
  CHECK(res.x[0] == 0.0);
  CHECK(res.value == 9.0);
}

TEST_CASE("infinite values are backed off from") {
  // log barrier at x = 1: the first trial step overshoots into +inf.
  auto f = [](std::span<const double> x, std::span<double> g) {
    if (x[0] >= 1.0) return std::numeric_limits<double>::infinity();
    g[0] = 1.0 / (1.0 - x[0]) - 0.5;
    return -std::log(1.0 - x[0]) - 0.5 * x[0];
  };
  LbfgsOptions opt;
  opt.max_iters = 50;
  const auto res = lbfgs_minimize(f, {-5.0}, opt);
  CHECK(res.x[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("invalid options") {
  auto f = [](std::span<const double>, std::span<double>) { return 0.0; };
  LbfgsOptions opt;
  opt.c1 = 0.95;
  CHECK_THROWS(lbfgs_minimize(f, {0.0}, opt));
}
