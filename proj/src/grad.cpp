#include "dgcrf/grad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "dgcrf/errors.hpp"
#include "dgcrf/kernels.hpp"
#include "dgcrf/parallel.hpp"

namespace dgcrf {

namespace {

constexpr std::size_t kPatchChunk = 128;

double mean_of(std::span<const double> v) { return kernels::sum(v.data(), v.size()) / static_cast<double>(v.size()); }

// Per-chunk partial sums for one bank, merged in chunk order.
struct Partial {
  std::vector<double> dpsi;  // K × n²
  std::vector<double> dw;    // K × n²
  std::vector<double> db;    // K
};

BankGradients zero_bank_gradients(int K, std::size_t n) {
  BankGradients g;
  g.dW.assign(K, Matrix(n, n));
  g.dPsi.assign(K, Matrix(n, n));
  g.db.assign(K, 0.0);
  return g;
}

// Selection-network backprop for patches [begin, end). `dgamma` holds one
// row of K values per patch; adds G·dx̄ to dpatch and accumulates dW, db into
// the partial. dW_k gets Σ_p ½ ds_pk u_pk u_pkᵀ as one GEMM per k.
void selection_chunk(const PgNetCache& pg, std::size_t begin, std::size_t end, const double* dgamma, std::size_t n,
                     Partial& part, double* dpatch) {
  const std::size_t K = static_cast<std::size_t>(pg.K);
  const std::size_t rows = end - begin;
  std::vector<double> ds_rows(rows * K), dxbar(n), scaled(rows * n);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t p = begin + r;
    const auto ds = softmax_backward(pg.gamma_of(p), {pg.scores.data() + p * K, K}, {dgamma + r * K, K}, pg.variant);
    std::copy(ds.begin(), ds.end(), ds_rows.begin() + static_cast<std::ptrdiff_t>(r * K));
    std::fill(dxbar.begin(), dxbar.end(), 0.0);
    const double* solved = pg.solved.data() + p * K * n;
    for (std::size_t k = 0; k < K; ++k) {
      part.db[k] += ds[k];
      kernels::axpy(-ds[k], solved + k * n, dxbar.data(), n);
    }
    const double m = mean_of(dxbar);
    double* dp = dpatch + p * n;
    for (std::size_t i = 0; i < n; ++i) dp[i] += dxbar[i] - m;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const double* u = pg.solved.data() + begin * K * n + k * n;
    for (std::size_t r = 0; r < rows; ++r) {
      const double c = 0.5 * ds_rows[r * K + k];
      for (std::size_t i = 0; i < n; ++i) scaled[r * n + i] = c * u[r * K * n + i];
    }
    kernels::gemm(true, n, n, rows, scaled.data(), n, u, K * n, part.dw.data() + k * n * n, n);
  }
}

}  // namespace

std::vector<double> backprop_combination(std::span<const double> dsigma, std::span<const double> gamma,
                                         std::span<const Matrix> psi, std::span<Matrix> dpsi) {
  std::vector<double> dgamma(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) {
    dgamma[k] = kernels::dot(psi[k].data(), dsigma.data(), dsigma.size());
    if (!dpsi.empty()) kernels::axpy(gamma[k], dsigma.data(), dpsi[k].data(), dsigma.size());
  }
  return dgamma;
}

void backprop_patch_inference_into(std::span<const double> dz, std::span<const double> w,
                                   std::span<const double> factor, double beta, std::span<double> dy,
                                   std::span<double> dsigma, std::span<double> q) {
  const std::size_t n = dz.size();
  std::copy(dz.begin(), dz.end(), q.begin());
  center_in_place(q);
  solve_lower_in_place(factor.data(), q.data(), n);
  solve_lower_transposed_in_place(factor.data(), q.data(), n);
  const double mq = mean_of(q);
  for (std::size_t i = 0; i < n; ++i) dy[i] = dz[i] - (q[i] - mq);
  // dL/dM = q wᵀ with dM = β dΣ + dε I and dε = 1e-6 β tr(dΣ) / n.
  const double diag = kernels::dot(q.data(), w.data(), n) * kRidgeScale * beta / static_cast<double>(n);
  const double hb = 0.5 * beta;
  for (std::size_t a = 0; a < n; ++a) {
    double* row = dsigma.data() + a * n;
    for (std::size_t b = 0; b < n; ++b) row[b] = hb * (q[a] * w[b] + w[a] * q[b]);
    row[a] += diag;
  }
}

PatchInferenceGrad backprop_patch_inference(std::span<const double> dz, std::span<const double> y,
                                            const Matrix& sigma, double beta) {
  const std::size_t n = y.size();
  if (dz.size() != n || sigma.rows() != n) throw ParameterError("patch gradient sizes do not match");
  std::vector<double> z(n), w(n), factor(n * n), q(n);
  if (!patch_inference_into(y, sigma.flat(), beta, relative_ridge(sigma.flat(), n, beta), z, w, factor)) {
    throw NumericError("patch inference factorization failed");
  }
  PatchInferenceGrad g{std::vector<double>(n), Matrix(n, n)};
  backprop_patch_inference_into(dz, w, factor, beta, g.dy, g.dsigma.flat(), q);
  return g;
}

std::vector<double> softmax_backward(std::span<const double> gamma, std::span<const double> scores,
                                     std::span<const double> dgamma, SoftmaxVariant variant) {
  const std::size_t K = gamma.size();
  const double avg = kernels::dot(gamma.data(), dgamma.data(), K);
  std::vector<double> ds(K);
  if (variant == SoftmaxVariant::Normalized) {
    double total = 0.0;
    for (double s : scores) total += s;
    for (std::size_t k = 0; k < K; ++k) ds[k] = (dgamma[k] - avg) / total;
    return ds;
  }
  for (std::size_t k = 0; k < K; ++k) ds[k] = gamma[k] * (dgamma[k] - avg);
  return ds;
}

void backprop_scores_into(std::span<const double> ds, std::span<const double> solved, std::size_t n,
                          std::span<Matrix> dW, std::span<double> db, std::span<double> dxbar) {
  for (std::size_t k = 0; k < ds.size(); ++k) {
    db[k] += ds[k];
    const double* u = solved.data() + k * n;
    kernels::ger(0.5 * ds[k], u, u, dW[k].data(), n, n);
    kernels::axpy(-ds[k], u, dxbar.data(), n);
  }
}

SelectionGrad backprop_selection(std::span<const double> dgamma, std::span<const double> xbar,
                                 const PotentialBank& bank, double sigma2, SoftmaxVariant variant) {
  const std::size_t n = bank.dim();
  const auto factors = make_selection_factors(bank, sigma2);
  std::vector<double> solved(bank.K * n);
  const auto s = quadratic_scores(xbar, factors, bank.biases, solved);
  const auto gamma = softmax_weights(s, variant);
  const auto ds = softmax_backward(gamma, s, dgamma, variant);
  SelectionGrad g{std::vector<Matrix>(bank.K, Matrix(n, n)), std::vector<double>(bank.K, 0.0),
                  std::vector<double>(n, 0.0)};
  backprop_scores_into(ds, solved, n, g.dW, g.db, g.dxbar);
  return g;
}

ImageFormationGrad backprop_image_formation(const Image& dY, const PatchGeometry& g, double sigma2, double beta) {
  if (dY.height != g.height || dY.width != g.width) throw ParameterError("gradient image does not match geometry");
  const auto counts = coverage_counts(g);
  const double bs = beta * sigma2;
  ImageFormationGrad out{std::vector<double>(g.count() * g.dim()), Image(dY.height, dY.width)};
  Image dS(dY.height, dY.width);
  for (std::size_t i = 0; i < dY.size(); ++i) {
    const double c = 1.0 / (1.0 + bs * counts[i]);
    out.dX.pixels[i] = c * dY.pixels[i];
    dS.pixels[i] = bs * c * dY.pixels[i];
  }
  for (std::size_t p = 0; p < g.count(); ++p) gather_patch(dS, g, p, {out.dz.data() + p * g.dim(), g.dim()});
  return out;
}

Matrix factor_gradient(const Matrix& dW, const Matrix& P) {
  const std::size_t n = P.rows();
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = dW(i, j) + dW(j, i);
  Matrix out = sym * P;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out(i, j) = 0.0;
  return out;
}

ModelGradients backprop_dgcrf(const Image& dYhat, const ForwardCache& cache, const Model& model) {
  const auto& cfg = model.config;
  if (!(cache.config.d == cfg.d && cache.config.K == cfg.K && cache.config.T() == cfg.T() &&
        cache.config.cascade == cfg.cascade && cache.config.share_bank == cfg.share_bank &&
        cache.config.share_bias == cfg.share_bias)) {
    throw ContractError("forward cache was produced by a different network configuration");
  }
  if (cache.layers.size() != static_cast<std::size_t>(cfg.T())) throw ContractError("forward cache is incomplete");
  if (dYhat.height != cache.input.height || dYhat.width != cache.input.width) {
    throw ParameterError("output gradient does not match image size");
  }
  const std::size_t n = static_cast<std::size_t>(cfg.d) * cfg.d;
  const std::size_t K = static_cast<std::size_t>(cfg.K);
  const auto& geo = cache.geometry;
  const std::size_t count = geo.count();
  const double sigma2 = cache.sigma2;
  const std::size_t chunks = chunk_count(count, kPatchChunk);

  ModelGradients grads;
  for (std::size_t b = 0; b < model.banks.size(); ++b) grads.banks.push_back(zero_bank_gradients(cfg.K, n));
  grads.layer_biases.assign(model.layer_biases.size(), std::vector<double>(K, 0.0));
  grads.dX = Image(dYhat.height, dYhat.width, 0.0);

  // Ψ as n²×K per bank, column k = vec Ψ_k.
  std::vector<std::vector<double>> psi_t;
  for (const auto& bank : model.banks) {
    auto& st = psi_t.emplace_back(n * n * K);
    for (std::size_t k = 0; k < K; ++k) {
      const Matrix psi = bank.psi(static_cast<int>(k));
      for (std::size_t i = 0; i < n * n; ++i) st[i * K + k] = psi.data()[i];
    }
  }

  std::vector<double> dgamma_total;  // non-cascade: summed over layers
  if (!cfg.cascade) dgamma_total.assign(count * K, 0.0);

  std::vector<Partial> parts(chunks);
  auto reset_parts = [&] {
    for (auto& p : parts) {
      p.dpsi.assign(K * n * n, 0.0);
      p.dw.assign(K * n * n, 0.0);
      p.db.assign(K, 0.0);
    }
  };
  auto merge_parts = [&](BankGradients& bg, std::span<double> db_target) {
    for (const auto& p : parts) {
      for (std::size_t k = 0; k < K; ++k) {
        kernels::axpy(1.0, p.dpsi.data() + k * n * n, bg.dPsi[k].data(), n * n);
        kernels::axpy(1.0, p.dw.data() + k * n * n, bg.dW[k].data(), n * n);
        db_target[k] += p.db[k];
      }
    }
  };

  Image dY = dYhat;
  std::vector<double> dpatch(count * n);
  for (int t = cfg.T() - 1; t >= 0; --t) {
    const LayerCache& L = cache.layers[t];
    const PgNetCache& pg = cache.pgnets[L.pgnet];
    const std::size_t b = model.bank_index(t);
    const auto ifg = backprop_image_formation(dY, geo, sigma2, L.beta);
    for (std::size_t i = 0; i < grads.dX.size(); ++i) grads.dX.pixels[i] += ifg.dX.pixels[i];

    reset_parts();
    const bool selection_here = cfg.cascade;
    parallel_chunks(count, kPatchChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      Partial& part = parts[chunk];
      const std::size_t rows = end - begin;
      // Every entry of dsig is written below, so it is left uninitialized.
      const std::unique_ptr<double[]> dsig(new double[rows * n * n]);
      std::vector<double> q(n), dgamma(rows * K, 0.0);
      for (std::size_t p = begin; p < end; ++p) {
        std::span<double> dy(dpatch.data() + p * n, n);
        backprop_patch_inference_into({ifg.dz.data() + p * n, n}, {L.w.data() + p * n, n},
                                      {L.factor.data() + p * n * n, n * n}, L.beta, dy,
                                      {dsig.get() + (p - begin) * n * n, n * n}, q);
      }
      // dγ = dΣ·Ψᵀ and dΨ += Γᵀ·dΣ over the chunk.
      kernels::gemm(false, rows, K, n * n, dsig.get(), n * n, psi_t[b].data(), K, dgamma.data(), K);
      kernels::gemm(true, K, n * n, rows, pg.gamma.data() + begin * K, K, dsig.get(), n * n, part.dpsi.data(),
                    n * n);
      if (selection_here) {
        selection_chunk(pg, begin, end, dgamma.data(), n, part, dpatch.data());
      } else {
        kernels::axpy(1.0, dgamma.data(), dgamma_total.data() + begin * K, rows * K);
      }
    });
    std::span<double> db_target = (t > 0 && cfg.has_layer_biases()) ? std::span<double>(grads.layer_biases[t - 1])
                                                                     : std::span<double>(grads.banks[b].db);
    merge_parts(grads.banks[b], db_target);
    dY = accumulate_patches(geo, dpatch);
  }

  if (!cfg.cascade && cfg.T() > 0) {
    const PgNetCache& pg = cache.pgnets[0];
    reset_parts();
    std::fill(dpatch.begin(), dpatch.end(), 0.0);
    parallel_chunks(count, kPatchChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      selection_chunk(pg, begin, end, dgamma_total.data() + begin * K, n, parts[chunk], dpatch.data());
    });
    merge_parts(grads.banks[0], grads.banks[0].db);
    const Image dsel = accumulate_patches(geo, dpatch);
    for (std::size_t i = 0; i < dY.size(); ++i) dY.pixels[i] += dsel.pixels[i];
  }
  for (std::size_t i = 0; i < dY.size(); ++i) grads.dX.pixels[i] += dY.pixels[i];

  for (std::size_t b = 0; b < model.banks.size(); ++b) {
    auto& bg = grads.banks[b];
    for (std::size_t k = 0; k < K; ++k) {
      bg.dP.push_back(factor_gradient(bg.dW[k], model.banks[b].factors_w[k]));
      bg.dR.push_back(factor_gradient(bg.dPsi[k], model.banks[b].factors_psi[k]));
    }
  }
  return grads;
}

std::vector<double> flatten_gradients(const ModelGradients& g, const Model& model) {
  std::vector<double> out;
  out.reserve(parameter_count(model));
  for (const auto& bg : g.banks) {
    for (const auto* group : {&bg.dP, &bg.dR})
      for (const auto& m : *group)
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t j = 0; j <= i; ++j) out.push_back(m(i, j));
    out.insert(out.end(), bg.db.begin(), bg.db.end());
  }
  for (const auto& lb : g.layer_biases) out.insert(out.end(), lb.begin(), lb.end());
  return out;
}

bool GradCheckReport::all_passed() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockReport& b) { return b.passed; });
}

std::string GradCheckReport::table() const {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-12s %14s %14s %12s %14s %14s  %s\n", "block", "analytic_norm", "numeric_norm",
                "max_rel_err", "worst_analytic", "worst_numeric", "status");
  os << line;
  for (const auto& b : blocks) {
    std::snprintf(line, sizeof line, "%-12s %14.6e %14.6e %12.3e %14.6e %14.6e  %s\n", b.name.c_str(),
                  b.analytic_norm, b.numeric_norm, b.max_rel_err, b.worst_analytic, b.worst_numeric,
                  b.passed ? "PASS" : "FAIL");
    os << line;
  }
  return os.str();
}

GradCheckReport finite_diff_check(const std::function<double(std::span<const double>)>& objective,
                                  std::span<const double> theta, std::span<const double> analytic,
                                  const std::vector<GradientBlock>& blocks, std::span<const double> epsilons,
                                  double tolerance) {
  if (analytic.size() != theta.size()) throw ParameterError("gradient length does not match parameters");
  if (epsilons.empty()) throw ParameterError("at least one finite-difference step is required");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ParameterError("finite-difference step must be positive");
  std::vector<double> probe(theta.begin(), theta.end());
  auto eval = [&] {
    const double v = objective(probe);
    if (!std::isfinite(v)) throw NumericError("objective is not finite during finite differencing");
    return v;
  };
  GradCheckReport report;
  for (const auto& block : blocks) {
    BlockReport br{block.name};
    double an2 = 0.0, nu2 = 0.0;
    for (std::size_t idx : block.indices) {
      const double a = analytic[idx];
      double best_err = std::numeric_limits<double>::infinity();
      double best_num = 0.0;
      for (double eps : epsilons) {
        auto at = [&](double h) {
          probe[idx] = theta[idx] + h;
          const double v = eval();
          probe[idx] = theta[idx];
          return v;
        };
        const double f1 = at(eps), f_1 = at(-eps), f2 = at(2 * eps), f_2 = at(-2 * eps);
        const double second = (f1 - f_1) / (2.0 * eps);
        const double fourth = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * eps);
        for (double num : {second, fourth}) {
          const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
          if (err < best_err) {
            best_err = err;
            best_num = num;
          }
        }
      }
      an2 += a * a;
      nu2 += best_num * best_num;
      if (best_err > br.max_rel_err || br.worst_index == static_cast<std::size_t>(-1)) {
        br.max_rel_err = best_err;
        br.worst_index = idx;
        br.worst_analytic = a;
        br.worst_numeric = best_num;
      }
    }
    br.analytic_norm = std::sqrt(an2);
    br.numeric_norm = std::sqrt(nu2);
    br.passed = br.max_rel_err <= tolerance;
    report.blocks.push_back(br);
  }
  return report;
}

std::vector<GradientBlock> parameter_blocks(const Model& model) {
  std::vector<GradientBlock> blocks;
  std::size_t offset = 0;
  auto take = [&](std::string name, std::size_t len) {
    GradientBlock b{std::move(name), {}};
    for (std::size_t i = 0; i < len; ++i) b.indices.push_back(offset + i);
    offset += len;
    blocks.push_back(std::move(b));
  };
  for (std::size_t b = 0; b < model.banks.size(); ++b) {
    const auto& bank = model.banks[b];
    const std::size_t tri = bank.dim() * (bank.dim() + 1) / 2;
    const std::string suffix = model.banks.size() > 1 ? "[" + std::to_string(b) + "]" : "";
    for (int k = 0; k < bank.K; ++k) take("P_" + std::to_string(k + 1) + suffix, tri);
    for (int k = 0; k < bank.K; ++k) take("R_" + std::to_string(k + 1) + suffix, tri);
    take("b" + suffix, bank.biases.size());
  }
  for (std::size_t t = 0; t < model.layer_biases.size(); ++t) {
    take("b_layer" + std::to_string(t + 2), model.layer_biases[t].size());
  }
  return blocks;
}

}  // namespace dgcrf
