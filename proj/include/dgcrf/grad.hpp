#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dgcrf/dense.hpp"
#include "dgcrf/image.hpp"
#include "dgcrf/inference.hpp"
#include "dgcrf/model.hpp"
#include "dgcrf/pgnet.hpp"

namespace dgcrf {

// Combination layer Σ = Σ_k γ_k Ψ_k: returns dL/dγ_k = tr(Ψ_kᵀ dL/dΣ) and
// accumulates dΨ_k += γ_k dL/dΣ.
std::vector<double> backprop_combination(std::span<const double> dsigma, std::span<const double> gamma,
                                         std::span<const Matrix> psi, std::span<Matrix> dpsi);

struct PatchInferenceGrad {
  std::vector<double> dy;
  Matrix dsigma;  // symmetric
};

// Cotangent dz → (dy, dΣ) for z = y − G M⁻¹ G y, M = βΣ + G + εI, with
// w = M⁻¹Gy and the Cholesky factor of M taken from the forward pass. The
// relative ridge ε depends on tr(Σ); its derivative is included.
void backprop_patch_inference_into(std::span<const double> dz, std::span<const double> w,
                                   std::span<const double> factor, double beta, std::span<double> dy,
                                   std::span<double> dsigma, std::span<double> work);
// Self-contained version that reruns the forward solve.
PatchInferenceGrad backprop_patch_inference(std::span<const double> dz, std::span<const double> y,
                                            const Matrix& sigma, double beta);

// dL/dγ → dL/ds through the weight layer.
std::vector<double> softmax_backward(std::span<const double> gamma, std::span<const double> scores,
                                     std::span<const double> dgamma, SoftmaxVariant variant);

struct SelectionGrad {
  std::vector<Matrix> dW;
  std::vector<double> db;
  std::vector<double> dxbar;
};

// Quadratic-score backprop given dL/ds and u_k = (W_k + σ²I)⁻¹x̄:
// dW_k += (ds_k/2) u_k u_kᵀ, db_k += ds_k, dx̄ = −Σ_k ds_k u_k.
void backprop_scores_into(std::span<const double> ds, std::span<const double> solved, std::size_t n,
                          std::span<Matrix> dW, std::span<double> db, std::span<double> dxbar);
SelectionGrad backprop_selection(std::span<const double> dgamma, std::span<const double> xbar,
                                 const PotentialBank& bank, double sigma2,
                                 SoftmaxVariant variant = SoftmaxVariant::Exponential);

struct ImageFormationGrad {
  std::vector<double> dz;  // count × n, PatchSet-shaped
  Image dX;
};

ImageFormationGrad backprop_image_formation(const Image& dY, const PatchGeometry& geometry, double sigma2,
                                            double beta);

struct BankGradients {
  std::vector<Matrix> dW, dPsi;  // symmetric, before the factor chain rule
  std::vector<Matrix> dP, dR;    // lower triangular
  std::vector<double> db;
};

struct ModelGradients {
  std::vector<BankGradients> banks;
  std::vector<std::vector<double>> layer_biases;
  Image dX;
};

// dP = (dW + dWᵀ) P restricted to the lower triangle.
Matrix factor_gradient(const Matrix& dW, const Matrix& P);

// Reverse pass through every layer of a cached forward evaluation.
ModelGradients backprop_dgcrf(const Image& dYhat, const ForwardCache& cache, const Model& model);
// Same ordering as to_parameters().
std::vector<double> flatten_gradients(const ModelGradients& g, const Model& model);

struct GradientBlock {
  std::string name;
  std::vector<std::size_t> indices;
};

struct BlockReport {
  std::string name;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  double max_rel_err = 0.0;
  std::size_t worst_index = static_cast<std::size_t>(-1);
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<BlockReport> blocks;
  bool all_passed() const;
  std::string table() const;
};

// Second- and fourth-order central differences per element, for every ε in
// `epsilons`, keeping the smallest error. Relative error uses the denominator
// max(|analytic|, |numeric|, 1e-8). Throws NumericError on a non-finite f.
GradCheckReport finite_diff_check(const std::function<double(std::span<const double>)>& objective,
                                  std::span<const double> theta, std::span<const double> analytic,
                                  const std::vector<GradientBlock>& blocks, std::span<const double> epsilons,
                                  double tolerance);

// One block per P, R and b group of each bank (and per-layer biases).
std::vector<GradientBlock> parameter_blocks(const Model& model);

}  // namespace dgcrf
