#include "dgcrf/pgnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/kernels.hpp"
#include "dgcrf/parallel.hpp"

namespace dgcrf {

namespace {
constexpr std::size_t kPatchChunk = 128;
}

PotentialBank::PotentialBank(int d_, int K_) : d(d_), K(K_), biases(static_cast<std::size_t>(K_), 0.0) {
  if (d_ < 2 || K_ < 1) throw ParameterError("bank needs d >= 2 and K >= 1");
  factors_w.assign(K_, Matrix(dim(), dim()));
  factors_psi.assign(K_, Matrix(dim(), dim()));
}

std::vector<Matrix> PotentialBank::psi_all() const {
  std::vector<Matrix> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) out.push_back(psi(k));
  return out;
}

void PotentialBank::validate() const {
  const std::size_t n = dim();
  if (factors_w.size() != static_cast<std::size_t>(K) || factors_psi.size() != static_cast<std::size_t>(K) ||
      biases.size() != static_cast<std::size_t>(K)) {
    throw ContractError("bank component count mismatch");
  }
  auto check = [&](const Matrix& m, const char* what, int k) {
    if (m.rows() != n || m.cols() != n) throw ContractError(std::string(what) + " factor has wrong shape");
    if (!is_lower_triangular(m)) {
      throw ContractError(std::string(what) + " factor " + std::to_string(k) + " has a nonzero upper triangle");
    }
    for (double v : m.flat())
      if (!std::isfinite(v)) throw ContractError(std::string(what) + " factor has non-finite entries");
  };
  for (int k = 0; k < K; ++k) {
    check(factors_w[k], "W", k);
    check(factors_psi[k], "Psi", k);
    if (!std::isfinite(biases[k])) throw ContractError("non-finite bias");
  }
}

SelectionFactors make_selection_factors(const PotentialBank& bank, double sigma2) {
  if (!(sigma2 > 0.0)) throw ParameterError("selection network needs sigma2 > 0");
  SelectionFactors f;
  f.sigma2 = sigma2;
  f.n = bank.dim();
  f.K = static_cast<std::size_t>(bank.K);
  const std::size_t n = f.n;
  f.inverse.assign(f.K * n * n, 0.0);
  std::vector<double> col(n);
  for (std::size_t k = 0; k < f.K; ++k) {
    Matrix a = bank.w(static_cast<int>(k));
    for (std::size_t i = 0; i < n; ++i) a(i, i) += sigma2;
    if (!cholesky_in_place(a.data(), n)) {
      throw NumericError("factorization of W_" + std::to_string(k) + " + sigma^2 I failed");
    }
    double* inv = f.inverse.data() + k * n * n;
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(col.begin(), col.end(), 0.0);
      col[j] = 1.0;
      solve_lower_in_place(a.data(), col.data(), n);
      solve_lower_transposed_in_place(a.data(), col.data(), n);
      for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
        inv[i * n + j] = inv[j * n + i] = m;
      }
  }
  f.side.resize(f.K * n * n);
  for (std::size_t k = 0; k < f.K; ++k)
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(f.inverse.data() + (k * n + i) * n, n, f.side.data() + i * f.K * n + k * n);
  return f;
}

void quadratic_scores_into(std::span<const double> xbar, const SelectionFactors& factors,
                           std::span<const double> biases, std::span<double> solved, std::span<double> scores) {
  const std::size_t n = factors.n;
  kernels::gemv(factors.inverse.data(), xbar.data(), solved.data(), factors.K * n, n);
  for (std::size_t k = 0; k < factors.K; ++k) {
    scores[k] = -0.5 * kernels::dot(xbar.data(), solved.data() + k * n, n) + biases[k];
  }
}

std::vector<double> quadratic_scores(std::span<const double> xbar, const SelectionFactors& factors,
                                     std::span<const double> biases, std::span<double> solved) {
  std::vector<double> s(factors.K);
  std::vector<double> local;
  if (solved.empty()) {
    local.resize(factors.K * factors.n);
    solved = local;
  }
  quadratic_scores_into(xbar, factors, biases, solved, s);
  return s;
}

std::vector<double> quadratic_scores(std::span<const double> xbar, const PotentialBank& bank, double sigma2) {
  return quadratic_scores(xbar, make_selection_factors(bank, sigma2), bank.biases);
}

std::vector<double> softmax_weights(std::span<const double> scores, SoftmaxVariant variant) {
  std::vector<double> g(scores.begin(), scores.end());
  if (variant == SoftmaxVariant::Normalized) {
    double total = 0.0;
    for (double v : g) total += v;
    for (double& v : g) v /= total;
    return g;
  }
  const double m = *std::max_element(g.begin(), g.end());
  double total = 0.0;
  for (double& v : g) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : g) v /= total;
  return g;
}

Matrix combine_potentials(std::span<const double> gamma, std::span<const Matrix> psi) {
  Matrix out(psi[0].rows(), psi[0].cols());
  for (std::size_t k = 0; k < psi.size(); ++k) kernels::axpy(gamma[k], psi[k].data(), out.data(), out.size());
  return out;
}

Matrix PairwisePotentials::as_matrix(std::size_t p) const {
  Matrix m(n, n);
  auto src = matrix(p);
  std::copy(src.begin(), src.end(), m.data());
  return m;
}

void PairwisePotentials::set(std::size_t p, const Matrix& m) {
  std::copy(m.flat().begin(), m.flat().end(), matrix(p).begin());
}

PgNetCache pgnet_forward(const Image& img, const PotentialBank& bank, std::span<const double> biases,
                         const SelectionFactors& factors, std::span<const Matrix> psi, SoftmaxVariant variant) {
  PgNetCache c;
  c.geometry = make_patch_geometry(img.height, img.width, bank.d);
  c.K = bank.K;
  c.sigma2 = factors.sigma2;
  c.variant = variant;
  const std::size_t count = c.geometry.count();
  const std::size_t n = bank.dim();
  const std::size_t K = static_cast<std::size_t>(bank.K);
  c.xbar.resize(count * n);
  c.scores.resize(count * K);
  c.gamma.resize(count * K);
  c.solved.resize(count * K * n);
  c.sigma = PairwisePotentials(n, count);

  std::vector<double> psi_stack(K * n * n);
  for (std::size_t k = 0; k < K; ++k) std::copy(psi[k].data(), psi[k].data() + n * n, psi_stack.data() + k * n * n);

  // Per chunk: solved = X̄·[A_1 … A_K] and Σ = Γ·Ψ as two small GEMMs.
  parallel_chunks(count, kPatchChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    const std::size_t rows = end - begin;
    for (std::size_t p = begin; p < end; ++p) {
      std::span<double> xb(c.xbar.data() + p * n, n);
      gather_patch(img, c.geometry, p, xb);
      center_in_place(xb);
    }
    double* solved = c.solved.data() + begin * K * n;
    kernels::gemm(false, rows, K * n, n, c.xbar.data() + begin * n, n, factors.side.data(), K * n, solved, K * n);
    for (std::size_t p = begin; p < end; ++p) {
      const double* xb = c.xbar.data() + p * n;
      double* s = c.scores.data() + p * K;
      for (std::size_t k = 0; k < K; ++k) s[k] = -0.5 * kernels::dot(xb, c.solved.data() + (p * K + k) * n, n) + biases[k];
      const auto g = softmax_weights({s, K}, variant);
      std::copy(g.begin(), g.end(), c.gamma.begin() + static_cast<std::ptrdiff_t>(p * K));
    }
    kernels::gemm(false, rows, n * n, K, c.gamma.data() + begin * K, K, psi_stack.data(), n * n,
                  c.sigma.matrix(begin).data(), n * n);
  });
  return c;
}

PgNetCache pgnet_forward(const Image& img, const PotentialBank& bank, double sigma2, SoftmaxVariant variant) {
  const auto factors = make_selection_factors(bank, sigma2);
  const auto psi = bank.psi_all();
  return pgnet_forward(img, bank, bank.biases, factors, psi, variant);
}

}  // namespace dgcrf
