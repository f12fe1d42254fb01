#include "dgcrf/inference.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/kernels.hpp"
#include "dgcrf/parallel.hpp"

namespace dgcrf {

namespace {

constexpr std::size_t kPatchChunk = 128;
constexpr std::size_t kOracleMaxPixels = 256;

double trace(std::span<const double> m, std::size_t n) {
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) t += m[i * n + i];
  return t;
}

void check_geometry(const Image& X, const PatchGeometry& g) {
  if (X.height != g.height || X.width != g.width) throw ParameterError("patch geometry does not match image");
}

// Σ̃⁻¹ applied to the centered patch, via Cholesky; returns (Gv)ᵀ Σ̃⁻¹ (Gv).
double centered_quadratic(std::span<const double> v, std::span<const double> sigma, std::size_t n, double ridge,
                          std::vector<double>& work_m, std::vector<double>& work_v) {
  std::copy(sigma.begin(), sigma.end(), work_m.begin());
  for (std::size_t i = 0; i < n; ++i) work_m[i * n + i] += ridge;
  if (!cholesky_in_place(work_m.data(), n)) throw NumericError("pairwise potential is not positive definite");
  std::copy(v.begin(), v.end(), work_v.begin());
  center_in_place(work_v);
  solve_lower_in_place(work_m.data(), work_v.data(), n);
  return kernels::dot(work_v.data(), work_v.data(), n);
}

Image dense_solve(const Image& X, const PairwisePotentials& sigma, double sigma2,
                  const std::function<Matrix(std::size_t)>& patch_operator, int d) {
  if (X.size() > kOracleMaxPixels) {
    throw ParameterError("direct solve oracle limited to " + std::to_string(kOracleMaxPixels) + " pixels");
  }
  const auto g = make_patch_geometry(X.height, X.width, d);
  if (sigma.count() != g.count()) throw ParameterError("potential count does not match geometry");
  const std::size_t N = X.size();
  const std::size_t n = g.dim();
  Matrix Q(N, N);
  std::vector<double> rhs(N);
  for (std::size_t i = 0; i < N; ++i) {
    Q(i, i) = 1.0 / sigma2;
    rhs[i] = X.pixels[i] / sigma2;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t p = 0; p < g.count(); ++p) {
    const Matrix A = patch_operator(p);
    const int r0 = g.anchor_row(p), c0 = g.anchor_col(p);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) idx[r * d + c] = static_cast<std::size_t>(r0 + r) * X.width + c0 + c;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) Q(idx[a], idx[b]) += A(a, b);
  }
  auto chol = Cholesky::factor(Q);
  if (!chol) throw NumericError("full-image system is not positive definite");
  return Image(X.height, X.width, chol->solve(rhs));
}

int patch_side(std::size_t n) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (static_cast<std::size_t>(d) * d != n) throw ParameterError("potential size is not a square patch");
  return d;
}

// G Σ̃⁻¹ G as a dense matrix.
Matrix centered_inverse(std::span<const double> sigma, std::size_t n, double ridge) {
  Matrix m(n, n);
  std::copy(sigma.begin(), sigma.end(), m.data());
  for (std::size_t i = 0; i < n; ++i) m(i, i) += ridge;
  auto chol = Cholesky::factor(m);
  if (!chol) throw NumericError("pairwise potential is not positive definite");
  Matrix out(n, n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = (i == j ? 1.0 : 0.0) - 1.0 / n;
    chol->solve_in_place(col);
    center_in_place(col);
    for (std::size_t i = 0; i < n; ++i) out(i, j) = col[i];
  }
  return out;
}

}  // namespace

double relative_ridge(std::span<const double> sigma, std::size_t n, double beta) {
  return kRidgeScale * (beta * trace(sigma, n) + static_cast<double>(n - 1)) / static_cast<double>(n);
}

bool patch_inference_into(std::span<const double> y, std::span<const double> sigma, double beta, double ridge,
                          std::span<double> z, std::span<double> w, std::span<double> factor) {
  const std::size_t n = y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n * n; ++i) factor[i] = beta * sigma[i] - inv_n;
  for (std::size_t i = 0; i < n; ++i) factor[i * n + i] += 1.0 + ridge;
  if (!cholesky_in_place(factor.data(), n)) return false;
  std::copy(y.begin(), y.end(), w.begin());
  center_in_place(w);
  solve_lower_in_place(factor.data(), w.data(), n);
  solve_lower_transposed_in_place(factor.data(), w.data(), n);
  double mean = 0.0;
  for (double v : w) mean += v;
  mean *= inv_n;
  for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - (w[i] - mean);
  return true;
}

std::vector<double> patch_inference(std::span<const double> y, const Matrix& sigma, double beta, double ridge) {
  const std::size_t n = y.size();
  if (sigma.rows() != n || sigma.cols() != n) throw ParameterError("potential size does not match patch");
  std::vector<double> z(n), w(n), factor(n * n);
  if (!patch_inference_into(y, sigma.flat(), beta, ridge, z, w, factor)) {
    throw NumericError("patch inference factorization failed");
  }
  return z;
}

Image image_formation(const PatchGeometry& g, std::span<const double> z, const Image& X, double sigma2,
                      double beta) {
  check_geometry(X, g);
  const Image S = accumulate_patches(g, z);
  const auto counts = coverage_counts(g);
  const double bs = beta * sigma2;
  Image Y(X.height, X.width);
  for (std::size_t i = 0; i < Y.size(); ++i) {
    Y.pixels[i] = (X.pixels[i] + bs * S.pixels[i]) / (1.0 + bs * counts[i]);
  }
  return Y;
}

LayerCache hqs_layer(const Image& current, const PairwisePotentials& sigma, const Image& X, double sigma2,
                     double beta) {
  if (!(sigma2 > 0.0) || !(beta > 0.0)) throw ParameterError("HQS layer needs sigma2 > 0 and beta > 0");
  const int d = patch_side(sigma.n);
  const auto g = make_patch_geometry(current.height, current.width, d);
  check_geometry(X, g);
  if (sigma.count() != g.count()) throw ParameterError("potential count does not match geometry");
  const std::size_t count = g.count();
  const std::size_t n = g.dim();

  LayerCache L;
  L.beta = beta;
  L.input = current;
  L.y.resize(count * n);
  L.w.resize(count * n);
  L.z.resize(count * n);
  L.factor.resize(count * n * n);
  L.ridge.resize(count);

  std::vector<std::size_t> failed(chunk_count(count, kPatchChunk), count);
  parallel_chunks(count, kPatchChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::span<double> y(L.y.data() + p * n, n);
      gather_patch(current, g, p, y);
      const auto sig = sigma.matrix(p);
      L.ridge[p] = relative_ridge(sig, n, beta);
      if (!patch_inference_into(y, sig, beta, L.ridge[p], {L.z.data() + p * n, n}, {L.w.data() + p * n, n},
                                {L.factor.data() + p * n * n, n * n})) {
        failed[chunk] = p;
        return;
      }
    }
  });
  for (std::size_t f : failed) {
    if (f != count) throw NumericError("patch inference factorization failed at patch " + std::to_string(f));
  }
  L.output = image_formation(g, L.z, X, sigma2, beta);
  return L;
}

ForwardResult dgcrf_forward(const Image& X, double sigma2, const Model& model, bool keep_cache) {
  const auto& cfg = model.config;
  if (!(sigma2 > 0.0)) throw ParameterError("noise variance must be positive");
  ForwardResult res;
  res.cache.config = cfg;
  res.cache.sigma2 = sigma2;
  res.cache.input = X;
  res.cache.geometry = make_patch_geometry(X.height, X.width, cfg.d);
  const auto betas = cfg.schedule.resolve(sigma2);
  const int T = cfg.T();

  std::vector<SelectionFactors> factors;
  std::vector<std::vector<Matrix>> psi;
  const std::size_t used_banks = cfg.cascade ? model.banks.size() : 1;
  for (std::size_t b = 0; b < used_banks; ++b) {
    factors.push_back(make_selection_factors(model.banks[b], sigma2));
    psi.push_back(model.banks[b].psi_all());
  }
  auto run_pgnet = [&](const Image& img, int t) {
    const std::size_t b = model.bank_index(t);
    return pgnet_forward(img, model.banks[b], model.biases_for_layer(t), factors[b], psi[b], cfg.softmax);
  };

  Image current = X;
  for (int t = 0; t < T; ++t) {
    if (t == 0 || cfg.cascade) {
      if (!keep_cache) res.cache.pgnets.clear();
      res.cache.pgnets.push_back(run_pgnet(current, t));
    }
    auto& pg = res.cache.pgnets.back();
    LayerCache layer = hqs_layer(current, pg.sigma, X, sigma2, betas[t]);
    // Backprop only needs the factors of M, so Σ is dropped after its last use.
    if (cfg.cascade || t + 1 == T) pg.sigma = PairwisePotentials();
    layer.pgnet = keep_cache ? res.cache.pgnets.size() - 1 : 0;
    current = layer.output;
    if (keep_cache) res.cache.layers.push_back(std::move(layer));
  }
  if (!keep_cache) res.cache.pgnets.clear();
  res.output = std::move(current);
  return res;
}

Image denoise(const Image& X, double sigma2, const Model& model) {
  return dgcrf_forward(X, sigma2, model, false).output;
}

double gcrf_energy(const Image& Y, const Image& X, const PairwisePotentials& sigma, double sigma2) {
  if (Y.height != X.height || Y.width != X.width) throw ParameterError("image dimensions differ");
  const int d = patch_side(sigma.n);
  const auto g = make_patch_geometry(Y.height, Y.width, d);
  if (sigma.count() != g.count()) throw ParameterError("potential count does not match geometry");
  const std::size_t n = g.dim();
  double data = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double e = Y.pixels[i] - X.pixels[i];
    data += e * e;
  }
  double pair = 0.0;
  std::vector<double> y(n), wm(n * n), wv(n);
  for (std::size_t p = 0; p < g.count(); ++p) {
    gather_patch(Y, g, p, y);
    const auto sig = sigma.matrix(p);
    pair += centered_quadratic(y, sig, n, kRidgeScale * trace(sig, n) / n, wm, wv);
  }
  return data / sigma2 + pair;
}

double hqs_cost(const Image& Y, std::span<const double> z, const PairwisePotentials& sigma, const Image& X,
                double sigma2, double beta) {
  if (Y.height != X.height || Y.width != X.width) throw ParameterError("image dimensions differ");
  const int d = patch_side(sigma.n);
  const auto g = make_patch_geometry(Y.height, Y.width, d);
  const std::size_t n = g.dim();
  if (sigma.count() != g.count() || z.size() != g.count() * n) {
    throw ParameterError("patch data does not match geometry");
  }
  double data = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double e = Y.pixels[i] - X.pixels[i];
    data += e * e;
  }
  double coupling = 0.0, pair = 0.0;
  std::vector<double> y(n), wm(n * n), wv(n);
  for (std::size_t p = 0; p < g.count(); ++p) {
    gather_patch(Y, g, p, y);
    const double* zp = z.data() + p * n;
    for (std::size_t i = 0; i < n; ++i) coupling += (y[i] - zp[i]) * (y[i] - zp[i]);
    const auto sig = sigma.matrix(p);
    pair += centered_quadratic({zp, n}, sig, n, relative_ridge(sig, n, beta) / beta, wm, wv);
  }
  return data / sigma2 + beta * coupling + pair;
}

Image direct_solve_oracle(const Image& X, const PairwisePotentials& sigma, double sigma2) {
  const std::size_t n = sigma.n;
  return dense_solve(
      X, sigma, sigma2,
      [&](std::size_t p) {
        const auto sig = sigma.matrix(p);
        return centered_inverse(sig, n, kRidgeScale * trace(sig, n) / n);
      },
      patch_side(n));
}

Image direct_solve_oracle(const Image& X, const PairwisePotentials& sigma, double sigma2, double beta) {
  const std::size_t n = sigma.n;
  // Minimizing over z leaves β yᵀ G M⁻¹ G y per patch, M = βΣ + G + εI.
  return dense_solve(
      X, sigma, sigma2,
      [&](std::size_t p) {
        const auto sig = sigma.matrix(p);
        std::vector<double> m(n * n);
        for (std::size_t i = 0; i < n * n; ++i) m[i] = beta * sig[i] - 1.0 / n;
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] += 1.0;
        Matrix inv = centered_inverse(m, n, relative_ridge(sig, n, beta));
        kernels::scale(beta, inv.data(), inv.size());
        return inv;
      },
      patch_side(n));
}

}  // namespace dgcrf
