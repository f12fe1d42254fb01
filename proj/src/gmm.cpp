#include "dgcrf/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/image.hpp"
#include "dgcrf/kernels.hpp"
#include "dgcrf/parallel.hpp"
#include "dgcrf/rng.hpp"

namespace dgcrf {

namespace {

constexpr std::size_t kSampleChunk = 1024;
constexpr double kPseudoCount = 1.0;

struct Component {
  Matrix lifted_chol;  // Cholesky of C + 11ᵀ/n
  double log_norm = 0.0;
  double penalty = 0.0;
};

Component prepare(const Matrix& C, double weight, double ridge) {
  const std::size_t n = C.rows();
  Matrix lifted = C;
  for (double& v : lifted.flat()) v += 1.0 / n;
  auto chol = Cholesky::factor(lifted);
  if (!chol) throw NumericError("GMM covariance is not positive definite on the patch subspace");
  Component c;
  const double log_det = chol->log_det();
  c.lifted_chol = chol->lower();
  c.log_norm = std::log(weight) - 0.5 * log_det - 0.5 * static_cast<double>(n - 1) * std::log(2.0 * std::numbers::pi);
  double tr_inv = 0.0;
  std::vector<double> e(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    solve_lower_in_place(c.lifted_chol.data(), e.data(), n);
    tr_inv += kernels::dot(e.data(), e.data(), n);
  }
  c.penalty = -0.5 * kPseudoCount * (log_det + ridge * (tr_inv - 1.0));
  return c;
}

Matrix global_covariance(std::span<const double> x, std::size_t n, double ridge) {
  const std::size_t N = x.size() / n;
  Matrix S(n, n);
  for (std::size_t i = 0; i < N; ++i) {
    const double* xi = x.data() + i * n;
    for (std::size_t a = 0; a < n; ++a) kernels::axpy(xi[a], xi, S.row(a).data(), n);
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) S(a, b) = (S(a, b) + ridge * ((a == b) - 1.0 / n)) / (N + kPseudoCount);
  return S;
}

}  // namespace

GmmFit fit_zero_mean_gmm(std::span<const double> patches, std::size_t n, const GmmOptions& opt) {
  if (opt.K < 1) throw ParameterError("GMM needs K >= 1");
  const std::size_t N = patches.size() / n;
  const std::size_t K = static_cast<std::size_t>(opt.K);
  if (N < K) throw ParameterError("GMM corpus smaller than the number of components");

  std::vector<double> x(patches.begin(), patches.end());
  for (std::size_t i = 0; i < N; ++i) center_in_place({x.data() + i * n, n});

  GaussianSource rng(opt.seed);
  const Matrix global = global_covariance(x, n, opt.ridge);

  // Hard initial assignment to seeded directions.
  std::vector<std::size_t> seeds;
  for (int attempt = 0; seeds.size() < K && attempt < static_cast<int>(100 * K); ++attempt) {
    const std::size_t i = static_cast<std::size_t>(rng.uniform() * N);
    const double nrm = kernels::dot(x.data() + i * n, x.data() + i * n, n);
    if (nrm > 0.0 && std::find(seeds.begin(), seeds.end(), i) == seeds.end()) seeds.push_back(i);
  }
  while (seeds.size() < K) seeds.push_back(static_cast<std::size_t>(rng.uniform() * N));
  std::vector<double> resp(N * K, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double* xi = x.data() + i * n;
    const double ni = std::sqrt(kernels::dot(xi, xi, n));
    std::size_t best = 0;
    double best_cos = -1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double* sk = x.data() + seeds[k] * n;
      const double ns = std::sqrt(kernels::dot(sk, sk, n));
      const double c = (ni > 0.0 && ns > 0.0) ? std::abs(kernels::dot(xi, sk, n)) / (ni * ns) : 0.0;
      if (c > best_cos) best_cos = c, best = k;
    }
    resp[i * K + best] = 1.0;
  }

  GmmFit fit;
  fit.covariances.assign(K, Matrix(n, n));
  fit.weights.assign(K, 1.0 / K);
  const std::size_t chunks = chunk_count(N, kSampleChunk);

  auto m_step = [&] {
    std::vector<std::vector<double>> part_s(chunks, std::vector<double>(K * n * n));
    std::vector<std::vector<double>> part_n(chunks, std::vector<double>(K));
    parallel_chunks(N, kSampleChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
      auto& S = part_s[c];
      auto& Nk = part_n[c];
      for (std::size_t i = begin; i < end; ++i) {
        const double* xi = x.data() + i * n;
        for (std::size_t k = 0; k < K; ++k) {
          const double r = resp[i * K + k];
          if (r == 0.0) continue;
          Nk[k] += r;
          double* Sk = S.data() + k * n * n;
          for (std::size_t a = 0; a < n; ++a) kernels::axpy(r * xi[a], xi, Sk + a * n, n);
        }
      }
    });
    std::vector<double> Nk(K, 0.0);
    for (auto& C : fit.covariances) std::fill(C.flat().begin(), C.flat().end(), 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        Nk[k] += part_n[c][k];
        kernels::axpy(1.0, part_s[c].data() + k * n * n, fit.covariances[k].data(), n * n);
      }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (Nk[k] < 1.0) {
        fit.covariances[k] = global;
        fit.weights[k] = 1.0 / K;
        ++fit.reseeded;
      } else {
        auto& C = fit.covariances[k];
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b)
            C(a, b) = (C(a, b) + opt.ridge * ((a == b) - 1.0 / n)) / (Nk[k] + kPseudoCount);
        fit.weights[k] = Nk[k] / static_cast<double>(N);
      }
      total += fit.weights[k];
    }
    for (double& w : fit.weights) w /= total;
  };

  auto e_step = [&] {
    std::vector<Component> comps;
    comps.reserve(K);
    for (std::size_t k = 0; k < K; ++k) comps.push_back(prepare(fit.covariances[k], fit.weights[k], opt.ridge));
    std::vector<double> part_ll(chunks, 0.0);
    parallel_chunks(N, kSampleChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
      std::vector<double> tmp(n), lp(K);
      for (std::size_t i = begin; i < end; ++i) {
        const double* xi = x.data() + i * n;
        for (std::size_t k = 0; k < K; ++k) {
          std::copy(xi, xi + n, tmp.begin());
          solve_lower_in_place(comps[k].lifted_chol.data(), tmp.data(), n);
          lp[k] = comps[k].log_norm - 0.5 * kernels::dot(tmp.data(), tmp.data(), n);
        }
        const double m = *std::max_element(lp.begin(), lp.end());
        double s = 0.0;
        for (double v : lp) s += std::exp(v - m);
        const double lse = m + std::log(s);
        part_ll[c] += lse;
        for (std::size_t k = 0; k < K; ++k) resp[i * K + k] = std::exp(lp[k] - lse);
      }
    });
    double ll = 0.0;
    for (double v : part_ll) ll += v;
    for (const auto& c : comps) ll += c.penalty;
    return ll;
  };

  m_step();
  for (int it = 0; it < opt.em_iters; ++it) {
    fit.log_likelihood.push_back(e_step());
    m_step();
  }
  // Objective at the final parameters.
  fit.log_likelihood.push_back(e_step());
  return fit;
}

PotentialBank gmm_init(std::span<const double> patches, int d, const GmmOptions& opt, double reference_sigma2) {
  const std::size_t n = static_cast<std::size_t>(d) * d;
  const std::size_t N = patches.size() / n;
  const std::size_t need = 10 * static_cast<std::size_t>(opt.K) * n;
  if (N < need) {
    throw ParameterError("patch corpus too small: need at least " + std::to_string(need) + " patches, got " +
                         std::to_string(N));
  }
  const auto fit = fit_zero_mean_gmm(patches, n, opt);
  PotentialBank bank(d, opt.K);
  for (int k = 0; k < opt.K; ++k) {
    Matrix W = fit.covariances[k];
    for (std::size_t i = 0; i < n; ++i) W(i, i) += opt.ridge;
    auto chol = Cholesky::factor(W);
    if (!chol) throw NumericError("GMM covariance " + std::to_string(k) + " is not positive definite");
    bank.factors_w[k] = chol->lower();
    bank.factors_psi[k] = chol->lower();
    for (std::size_t i = 0; i < n; ++i) W(i, i) += reference_sigma2;
    auto ref = Cholesky::factor(W);
    bank.biases[k] = std::log(fit.weights[k]) - 0.5 * ref->log_det();
  }
  return bank;
}

PotentialBank random_init(int K, int d, std::uint64_t seed, double scale) {
  PotentialBank bank(d, K);
  GaussianSource rng(seed);
  const std::size_t n = bank.dim();
  for (auto* group : {&bank.factors_w, &bank.factors_psi}) {
    for (auto& f : *group) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) f(i, j) = scale * rng.normal();
        f(i, i) += 1.0;
      }
    }
  }
  return bank;
}

}  // namespace dgcrf
