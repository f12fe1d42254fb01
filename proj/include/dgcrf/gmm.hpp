#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dgcrf/dense.hpp"
#include "dgcrf/pgnet.hpp"

namespace dgcrf {

struct GmmOptions {
  int K = 16;
  int em_iters = 30;
  std::uint64_t seed = 1;
  double ridge = 1e-6;  // added to every fitted covariance
};

struct GmmFit {
  std::vector<Matrix> covariances;  // supported on the zero-mean subspace
  std::vector<double> weights;
  // Penalized log-likelihood before each M-step and after the last one;
  // non-decreasing except across re-seeding events.
  std::vector<double> log_likelihood;
  int reseeded = 0;
};

// Zero-mean GMM on mean-subtracted d²-vectors (rows of `patches`), fitted by
// EM. Densities are evaluated on the subspace orthogonal to 1. Covariance
// updates are C_k = (S_k + ridge·G) / (N_k + 1), the MAP step that keeps
// flat-patch clusters non-singular. Responsibilities start from a hard
// assignment to K seeded sample directions (largest |cosine|).
GmmFit fit_zero_mean_gmm(std::span<const double> patches, std::size_t n, const GmmOptions& options);

// Bank with W_k = Ψ_k = C_k + ridge·I and
// b_k = log π_k − ½ log det(W_k + σ₀²I). Requires ≥ 10·K·d² patches.
PotentialBank gmm_init(std::span<const double> patches, int d, const GmmOptions& options, double reference_sigma2);

// P_k, R_k = scale·(standard normal lower triangle) + I, b_k = 0.
PotentialBank random_init(int K, int d, std::uint64_t seed, double scale);

}  // namespace dgcrf
