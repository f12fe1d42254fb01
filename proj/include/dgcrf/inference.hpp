#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgcrf/dense.hpp"
#include "dgcrf/image.hpp"
#include "dgcrf/model.hpp"
#include "dgcrf/pgnet.hpp"

namespace dgcrf {

inline constexpr double kRidgeScale = 1e-6;

// ε = 1e-6 · trace(βΣ + G) / d², added to βΣ + G before factorization.
double relative_ridge(std::span<const double> sigma, std::size_t n, double beta);

// z = y − G (βΣ + G + ridge·I)⁻¹ G y: the minimizer over z of
// β‖y − z‖² + zᵀ G Σ̃⁻¹ G z with Σ̃ = Σ + (ridge/β) I.
std::vector<double> patch_inference(std::span<const double> y, const Matrix& sigma, double beta, double ridge);

// Low-level form used by the network. Writes z, w = M⁻¹Gy and the Cholesky
// factor of M. Returns false if M is not numerically positive definite.
bool patch_inference_into(std::span<const double> y, std::span<const double> sigma, double beta, double ridge,
                          std::span<double> z, std::span<double> w, std::span<double> factor);

// Y(i,j) = [X(i,j)/σ² + β S(i,j)] / [1/σ² + β N(i,j)], S the sum of all z
// values covering (i,j).
Image image_formation(const PatchGeometry& geometry, std::span<const double> z, const Image& X, double sigma2,
                      double beta);
inline Image image_formation(const PatchSet& zset, const Image& X, double sigma2, double beta) {
  return image_formation(zset.geometry, zset.values, X, sigma2, beta);
}

// Everything one HQS layer (PI then IF) produced.
struct LayerCache {
  double beta = 0.0;
  std::size_t pgnet = 0;  // index into ForwardCache::pgnets supplying Σ
  Image input;
  std::vector<double> y;       // count × n
  std::vector<double> w;       // count × n, M⁻¹ G y
  std::vector<double> z;       // count × n
  std::vector<double> factor;  // count × n², lower Cholesky of M
  std::vector<double> ridge;   // count
  Image output;
};

LayerCache hqs_layer(const Image& current, const PairwisePotentials& sigma, const Image& X, double sigma2,
                     double beta);

struct ForwardCache {
  NetworkConfig config;
  double sigma2 = 0.0;
  Image input;
  PatchGeometry geometry;
  std::vector<PgNetCache> pgnets;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  Image output;
  ForwardCache cache;
};

// Full network: PgNet on Y^t before each HQS layer when cascading (Y⁰ = X),
// otherwise one PgNet on X whose potentials serve every layer. With
// keep_cache = false only the output is retained.
ForwardResult dgcrf_forward(const Image& X, double sigma2, const Model& model, bool keep_cache = true);
Image denoise(const Image& X, double sigma2, const Model& model);

// Σ_ij (1/σ²)[Y − X]² + Σ_patches (Gy)ᵀ Σ̃⁻¹ (Gy), Σ̃ = Σ + 1e-6·tr(Σ)/d² I.
double gcrf_energy(const Image& Y, const Image& X, const PairwisePotentials& sigma, double sigma2);

// Half-quadratic cost J(Y, {z}, β) using the same ridge as patch inference
// at this β, so PI and IF are its exact block minimizers.
double hqs_cost(const Image& Y, std::span<const double> z, const PairwisePotentials& sigma, const Image& X,
                double sigma2, double beta);

// Dense full-image solves for tiny images (≤ 256 pixels), test oracles.
// Minimizer of gcrf_energy.
Image direct_solve_oracle(const Image& X, const PairwisePotentials& sigma, double sigma2);
// Joint minimizer over (Y, {z}) of hqs_cost at fixed β.
Image direct_solve_oracle(const Image& X, const PairwisePotentials& sigma, double sigma2, double beta);

}  // namespace dgcrf
