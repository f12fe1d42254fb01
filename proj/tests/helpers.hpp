#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dgcrf/dense.hpp"
#include "dgcrf/image.hpp"
#include "dgcrf/model.hpp"
#include "dgcrf/pgnet.hpp"
#include "dgcrf/rng.hpp"

namespace testutil {

using namespace dgcrf;

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  GaussianSource rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Q diag(λ) Qᵀ with λ uniform in [lo, hi] and Q from Gram–Schmidt.
inline Matrix random_spd(std::size_t n, std::uint64_t seed, double lo, double hi) {
  GaussianSource rng(seed);
  Matrix q(n, n);
  for (double& v : q.flat()) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += q(i, c) * q(j, c);
      for (std::size_t c = 0; c < n; ++c) q(i, c) -= dot * q(j, c);
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < n; ++c) norm += q(i, c) * q(i, c);
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < n; ++c) q(i, c) /= norm;
  }
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lam = lo + (hi - lo) * rng.uniform();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += lam * q(k, i) * q(k, j);
  }
  return out;
}

inline Image random_image(int h, int w, std::uint64_t seed) {
  GaussianSource rng(seed);
  Image img(h, w);
  for (double& p : img.pixels) p = rng.uniform();
  return img;
}

inline PairwisePotentials random_potentials(const PatchGeometry& g, std::uint64_t seed, double lo, double hi) {
  PairwisePotentials s(g.dim(), g.count());
  for (std::size_t p = 0; p < g.count(); ++p) s.set(p, random_spd(g.dim(), seed * 7919 + p, lo, hi));
  return s;
}

// Gauss–Jordan inverse with partial pivoting, independent of the library's
// Cholesky code.
inline Matrix naive_inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const double d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

inline std::vector<double> naive_solve(const Matrix& a, const std::vector<double>& b) {
  const Matrix inv = naive_inverse(a);
  std::vector<double> x(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) x[i] += inv(i, j) * b[j];
  return x;
}

inline Matrix centering(std::size_t n) {
  Matrix g = Matrix::identity(n);
  for (double& v : g.flat()) v -= 1.0 / static_cast<double>(n);
  return g;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Small random model with Ψ scaled so that βΨ is of order one at σ = 25.
inline Model small_model(const NetworkConfig& net, std::uint64_t seed, double psi_scale = 0.1) {
  PotentialBank bank(net.d, net.K);
  GaussianSource rng(seed);
  const std::size_t n = bank.dim();
  for (int k = 0; k < net.K; ++k) {
    for (auto* f : {&bank.factors_w[k], &bank.factors_psi[k]}) {
      const double s = f == &bank.factors_psi[k] ? psi_scale : 1.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) (*f)(i, j) = s * ((i == j ? 1.0 : 0.0) + 0.4 * rng.normal());
    }
    bank.biases[k] = rng.normal();
  }
  Model m = Model::from_bank(net, bank);
  for (auto& lb : m.layer_biases)
    for (double& b : lb) b = rng.normal();
  return m;
}

}  // namespace testutil
