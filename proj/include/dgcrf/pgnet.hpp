#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgcrf/dense.hpp"
#include "dgcrf/image.hpp"

namespace dgcrf {

// Learnable selection/potential parameters. W_k = P_k P_kᵀ and Ψ_k = R_k R_kᵀ
// are PSD by construction; P_k and R_k are d²×d² lower-triangular.
struct PotentialBank {
  int d = 0;
  int K = 0;
  std::vector<Matrix> factors_w;
  std::vector<Matrix> factors_psi;
  std::vector<double> biases;

  PotentialBank() = default;
  PotentialBank(int d, int K);

  std::size_t dim() const { return static_cast<std::size_t>(d) * d; }
  Matrix w(int k) const { return gram(factors_w[k]); }
  Matrix psi(int k) const { return gram(factors_psi[k]); }
  std::vector<Matrix> psi_all() const;

  // Shapes, strictly-zero upper triangles, finiteness. Throws ContractError.
  void validate() const;
  bool operator==(const PotentialBank&) const = default;
};

enum class SoftmaxVariant {
  Exponential,  // γ = exp(s − max s) / Σ exp(s − max s)
  Normalized,   // γ = s / Σ s, ablation only; may leave the simplex
};

// (W_k + σ²I)⁻¹ for k = 1..K stacked into one K·d²×d² block, built once per
// (bank, σ²) and shared by every patch and layer of a forward pass.
struct SelectionFactors {
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::size_t K = 0;
  std::vector<double> inverse;  // K·d² × d², block k = (W_k + σ²I)⁻¹
  std::vector<double> side;     // d² × K·d², the same blocks side by side
};

SelectionFactors make_selection_factors(const PotentialBank& bank, double sigma2);

// s_k = −½ x̄ᵀ(W_k + σ²I)⁻¹x̄ + b_k. When `solved` is non-empty it receives
// the K×d² block of (W_k + σ²I)⁻¹x̄ vectors.
std::vector<double> quadratic_scores(std::span<const double> xbar, const SelectionFactors& factors,
                                     std::span<const double> biases, std::span<double> solved = {});
std::vector<double> quadratic_scores(std::span<const double> xbar, const PotentialBank& bank, double sigma2);
// Allocation-free form; `solved` must hold K·d² values and `scores` K.
void quadratic_scores_into(std::span<const double> xbar, const SelectionFactors& factors,
                           std::span<const double> biases, std::span<double> solved, std::span<double> scores);

std::vector<double> softmax_weights(std::span<const double> scores,
                                    SoftmaxVariant variant = SoftmaxVariant::Exponential);

Matrix combine_potentials(std::span<const double> gamma, std::span<const Matrix> psi);
inline Matrix combine_potentials(std::span<const double> gamma, const PotentialBank& bank) {
  const auto psi = bank.psi_all();
  return combine_potentials(gamma, psi);
}

// Per-patch dense symmetric d²×d² matrices Σ_ij.
struct PairwisePotentials {
  std::size_t n = 0;
  std::vector<double> values;

  PairwisePotentials() = default;
  PairwisePotentials(std::size_t n, std::size_t count) : n(n), values(count * n * n, 0.0) {}

  std::size_t count() const { return n == 0 ? 0 : values.size() / (n * n); }
  std::span<const double> matrix(std::size_t p) const { return {values.data() + p * n * n, n * n}; }
  std::span<double> matrix(std::size_t p) { return {values.data() + p * n * n, n * n}; }
  Matrix as_matrix(std::size_t p) const;
  void set(std::size_t p, const Matrix& m);
};

// Intermediates of one PgNet evaluation, kept for backprop.
struct PgNetCache {
  PatchGeometry geometry;
  int K = 0;
  double sigma2 = 0.0;
  SoftmaxVariant variant = SoftmaxVariant::Exponential;
  std::vector<double> xbar;    // count × n
  std::vector<double> scores;  // count × K
  std::vector<double> gamma;   // count × K
  std::vector<double> solved;  // count × K × n, (W_k + σ²I)⁻¹ x̄
  PairwisePotentials sigma;  // empty once dgcrf_forward has consumed it

  std::size_t count() const { return geometry.count(); }
  std::span<const double> gamma_of(std::size_t p) const { return {gamma.data() + p * K, static_cast<std::size_t>(K)}; }
};

// extract_patches → mean_subtract → quadratic_scores → softmax_weights →
// combine_potentials, per patch.
PgNetCache pgnet_forward(const Image& img, const PotentialBank& bank, std::span<const double> biases,
                         const SelectionFactors& factors, std::span<const Matrix> psi,
                         SoftmaxVariant variant = SoftmaxVariant::Exponential);
PgNetCache pgnet_forward(const Image& img, const PotentialBank& bank, double sigma2,
                         SoftmaxVariant variant = SoftmaxVariant::Exponential);

}  // namespace dgcrf
