#include <doctest.h>

#include <cmath>

#include "dgcrf/errors.hpp"
#include "dgcrf/inference.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;

namespace {

// argmin_z β‖y − z‖² + zᵀ G Σ⁻¹ G z from the dense normal equations.
std::vector<double> normal_equation_pi(const std::vector<double>& y, const Matrix& sigma, double beta) {
  const std::size_t n = y.size();
  const Matrix G = centering(n);
  const Matrix A = G * naive_inverse(sigma) * G;
  Matrix lhs = A;
  for (std::size_t i = 0; i < n; ++i) lhs(i, i) += beta;
  std::vector<double> rhs(y);
  for (double& v : rhs) v *= beta;
  return naive_solve(lhs, rhs);
}

// Y-subproblem minimizer by explicit enumeration of covering patches.
Image naive_image_formation(const PatchGeometry& g, const std::vector<double>& z, const Image& X, double sigma2,
                            double beta) {
  Image Y(X.height, X.width);
  for (int r = 0; r < X.height; ++r) {
    for (int c = 0; c < X.width; ++c) {
      double a = 1.0 / sigma2, b = X.at(r, c) / sigma2;
      for (std::size_t p = 0; p < g.count(); ++p) {
        const int dr = r - g.anchor_row(p), dc = c - g.anchor_col(p);
        if (dr < 0 || dc < 0 || dr >= g.d || dc >= g.d) continue;
        a += beta;
        b += beta * z[p * g.dim() + static_cast<std::size_t>(dr * g.d + dc)];
      }
      Y.at(r, c) = b / a;
    }
  }
  return Y;
}

}  // namespace

TEST_CASE("patch inference matches the dense normal equations") {
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = trial % 2 ? 4 : 9;
    const Matrix sigma = random_spd(n, 100 + trial, 0.05, 2.0);
    const auto y = random_vector(n, 200 + trial);
    const double beta = 0.5 + 50.0 * GaussianSource(trial).uniform();
    const auto z = patch_inference(y, sigma, beta, 0.0);
    const auto ref = normal_equation_pi(y, sigma, beta);
    CHECK(max_abs(z, ref) <= 1e-9 * inf_norm(ref));
  }
}

TEST_CASE("patch inference ridge is a Σ shift of ridge/β") {
  const Matrix sigma = random_spd(9, 5, 0.1, 1.0);
  const auto y = random_vector(9, 6);
  const double beta = 7.0, ridge = 0.01;
  Matrix shifted = sigma;
  for (std::size_t i = 0; i < 9; ++i) shifted(i, i) += ridge / beta;
  CHECK(max_abs(patch_inference(y, sigma, beta, ridge), normal_equation_pi(y, shifted, beta)) < 1e-12);
  CHECK(relative_ridge(sigma.flat(), 9, beta) > 0.0);
}

TEST_CASE("patch inference keeps the patch mean and removes nothing from a flat patch") {
  const Matrix sigma = random_spd(4, 9, 0.1, 1.0);
  const std::vector<double> flat(4, 0.7);
  const auto z = patch_inference(flat, sigma, 3.0, 1e-6);
  for (double v : z) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));
  const auto y = random_vector(4, 3);
  const auto zz = patch_inference(y, sigma, 3.0, 1e-6);
  CHECK(mean_subtract(zz).mean == doctest::Approx(mean_subtract(y).mean).epsilon(1e-13));
}

TEST_CASE("image formation equals the per-pixel closed form") {
  for (int trial = 0; trial < 10; ++trial) {
    const Image X = random_image(8, 8, trial);
    const auto g = make_patch_geometry(8, 8, 3);
    const auto z = random_vector(g.count() * g.dim(), 50 + trial);
    const double sigma2 = 0.003 + 0.01 * trial, beta = 1.0 + 10.0 * trial;
    const Image Y = image_formation(g, z, X, sigma2, beta);
    const Image ref = naive_image_formation(g, z, X, sigma2, beta);
    for (std::size_t i = 0; i < Y.size(); ++i) CHECK(std::abs(Y.pixels[i] - ref.pixels[i]) <= 1e-12);
  }
}

TEST_CASE("hqs half-steps never increase the cost") {
  const Image X = random_image(9, 9, 77);
  const auto g = make_patch_geometry(9, 9, 3);
  const auto sigma = random_potentials(g, 3, 0.05, 1.0);
  const double sigma2 = 0.01, beta = 30.0;
  Image Y = X;
  std::vector<double> z = extract_patches(X, 3).values;
  double J = hqs_cost(Y, z, sigma, X, sigma2, beta);
  for (int it = 0; it < 10; ++it) {
    const LayerCache L = hqs_layer(Y, sigma, X, sigma2, beta);
    const double Jz = hqs_cost(Y, L.z, sigma, X, sigma2, beta);
    CHECK(Jz <= J + 1e-10 * std::abs(J));
    const double Jy = hqs_cost(L.output, L.z, sigma, X, sigma2, beta);
    CHECK(Jy <= Jz + 1e-10 * std::abs(Jz));
    Y = L.output;
    z = L.z;
    J = Jy;
  }
}

TEST_CASE("repeated layers at fixed beta converge to the joint minimizer") {
  const Image X = random_image(8, 8, 5);
  const auto g = make_patch_geometry(8, 8, 3);
  const auto sigma = random_potentials(g, 9, 0.1, 1.0);
  const double sigma2 = 0.01, beta = 2.0;
  Image Y = X;
  for (int it = 0; it < 50; ++it) Y = hqs_layer(Y, sigma, X, sigma2, beta).output;
  const Image ref = direct_solve_oracle(X, sigma, sigma2, beta);
  double err = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) err = std::max(err, std::abs(Y.pixels[i] - ref.pixels[i]));
  CHECK(err < 1e-6);
}

TEST_CASE("direct solve oracle minimizes the energy") {
  const Image X = random_image(6, 7, 8);
  const auto g = make_patch_geometry(6, 7, 2);
  const auto sigma = random_potentials(g, 4, 0.05, 0.5);
  const double sigma2 = 0.02;
  const Image Y = direct_solve_oracle(X, sigma, sigma2);
  const double e0 = gcrf_energy(Y, X, sigma, sigma2);
  CHECK(e0 <= gcrf_energy(X, X, sigma, sigma2));
  GaussianSource rng(1);
  for (int t = 0; t < 20; ++t) {
    Image P = Y;
    for (double& p : P.pixels) p += 1e-3 * rng.normal();
    CHECK(gcrf_energy(P, X, sigma, sigma2) >= e0);
  }
  CHECK_THROWS_AS(direct_solve_oracle(random_image(20, 20, 1), random_potentials(make_patch_geometry(20, 20, 2), 1, 0.1, 1.0), sigma2),
                  ParameterError);
}

TEST_CASE("forward pass limits and schedule") {
  NetworkConfig net;
  net.d = 3;
  net.K = 2;
  net.schedule = HQSSchedule::standard(3);
  const Model m = small_model(net, 3);
  const Image X = random_image(10, 10, 1);
  const Image Y = denoise(X, 1e-12, m);
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(std::abs(Y.pixels[i] - X.pixels[i]) < 1e-6);

  const auto betas = HQSSchedule::standard(6).resolve(0.25);
  const double expect[] = {4, 16, 32, 64, 128, 256};
  for (int i = 0; i < 6; ++i) CHECK(betas[i] == expect[i]);
  CHECK_THROWS_AS(HQSSchedule::standard(7), ParameterError);
  CHECK_THROWS_AS(HQSSchedule({{2.0, 1.0}}).validate(), ParameterError);
  CHECK_THROWS_AS(denoise(random_image(2, 2, 1), 0.01, m), ParameterError);
}

TEST_CASE("cache-free forward equals cached forward") {
  NetworkConfig net;
  net.d = 3;
  net.K = 3;
  net.schedule = HQSSchedule::standard(4);
  for (bool cascade : {true, false}) {
    net.cascade = cascade;
    const Model m = small_model(net, 8);
    const Image X = random_image(11, 9, 2);
    const auto fwd = dgcrf_forward(X, 0.01, m);
    CHECK(fwd.output == denoise(X, 0.01, m));
    CHECK(fwd.cache.layers.size() == 4u);
    CHECK(fwd.cache.pgnets.size() == (cascade ? 4u : 1u));
  }
}
