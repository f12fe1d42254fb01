#include "dgcrf/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/grad.hpp"
#include "dgcrf/inference.hpp"
#include "dgcrf/rng.hpp"

namespace dgcrf {

void TrainConfig::validate() const {
  network.validate();
  if (sigma255_list.empty()) throw ParameterError("training needs at least one noise level");
  for (double s : sigma255_list)
    if (!(s > 0.0)) throw ParameterError("training noise levels must be positive");
  if (lbfgs_memory < 1) throw ParameterError("lbfgs memory must be positive");
  if (max_iters < 0) throw ParameterError("max iterations must be non-negative");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw ParameterError("line search constants need 0 < c1 < c2 < 1");
  if (crop_size < network.d) throw ParameterError("crop size smaller than patch size");
}

std::vector<TrainingPair> make_training_pairs(const std::vector<Image>& clean, const TrainConfig& cfg) {
  std::vector<TrainingPair> pairs;
  GaussianSource rng(mix_seed(cfg.seed, 0xC0FFEE));
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Image& img = clean[i];
    if (img.height < cfg.crop_size || img.width < cfg.crop_size) {
      throw ParameterError("training image " + std::to_string(i) + " is smaller than the crop size");
    }
    const int r = static_cast<int>(rng.uniform() * (img.height - cfg.crop_size + 1));
    const int c = static_cast<int>(rng.uniform() * (img.width - cfg.crop_size + 1));
    TrainingPair p;
    p.clean = crop(img, r, c, cfg.crop_size, cfg.crop_size);
    p.sigma255 = cfg.sigma255_list[i % cfg.sigma255_list.size()];
    p.noisy = add_gaussian_noise(p.clean, p.sigma255, mix_seed(cfg.seed, i), cfg.quantize_noise);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

LossResult psnr_loss(const Image& yhat, const Image& target) {
  const double mse = mean_squared_error(yhat, target);
  LossResult r;
  r.grad = Image(yhat.height, yhat.width, 0.0);
  if (mse == 0.0) {
    r.loss = -kPsnrCap;
    r.zero_mse = true;
    return r;
  }
  r.loss = 10.0 * std::log10(mse);
  const double norm2 = mse * static_cast<double>(yhat.size());
  const double c = 20.0 / std::numbers::ln10 / norm2;
  for (std::size_t i = 0; i < yhat.size(); ++i) r.grad.pixels[i] = c * (yhat.pixels[i] - target.pixels[i]);
  return r;
}

TrainingObjective::TrainingObjective(std::vector<TrainingPair> pairs, Model shape)
    : pairs_(std::move(pairs)), shape_(std::move(shape)) {
  if (pairs_.empty()) throw ParameterError("training objective needs at least one pair");
}

double TrainingObjective::operator()(std::span<const double> theta, std::span<double> grad) const {
  Model m = shape_;
  assign_parameters(m, theta);
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv = 1.0 / static_cast<double>(pairs_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& pr = pairs_[i];
    const double sigma2 = sigma2_from_255(pr.sigma255);
    ForwardResult fwd;
    try {
      fwd = dgcrf_forward(pr.noisy, sigma2, m);
    } catch (const NumericError&) {
      // Outside the numerically valid region; the line search backs off.
      return std::numeric_limits<double>::infinity();
    }
    const auto loss = psnr_loss(fwd.output, pr.clean);
    if (!std::isfinite(loss.loss)) {
      throw NumericError("non-finite loss on training pair " + std::to_string(i));
    }
    total += loss.loss;
    const auto g = flatten_gradients(backprop_dgcrf(loss.grad, fwd.cache, m), m);
    for (std::size_t j = 0; j < g.size(); ++j) grad[j] += inv * g[j];
  }
  return total * inv;
}

double TrainingObjective::value(std::span<const double> theta) const {
  Model m = shape_;
  assign_parameters(m, theta);
  double total = 0.0;
  for (const auto& pr : pairs_) {
    total += psnr_loss(denoise(pr.noisy, sigma2_from_255(pr.sigma255), m), pr.clean).loss;
  }
  return total / static_cast<double>(pairs_.size());
}

TrainResult train(const std::vector<Image>& clean, const TrainConfig& config, const Model& init,
                  const std::function<void(const TrainLogEntry&)>& on_log) {
  config.validate();
  init.validate();
  if (clean.empty()) throw ParameterError("training needs at least one image");
  TrainingObjective objective(make_training_pairs(clean, config), init);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  TrainResult result;
  result.model = init;
  if (config.max_iters == 0) {
    const double v = objective.value(to_parameters(init));
    result.log.push_back({0, v, 0.0, -v, elapsed()});
    if (on_log) on_log(result.log.back());
    return result;
  }

  LbfgsOptions opt;
  opt.memory = config.lbfgs_memory;
  opt.max_iters = config.max_iters;
  opt.c1 = config.c1;
  opt.c2 = config.c2;
  opt.grad_tol = config.grad_tol;
  opt.value_tol = config.value_tol;

  auto fn = [&](std::span<const double> x, std::span<double> g) { return objective(x, g); };
  // Initial entry.
  {
    std::vector<double> g(parameter_count(init));
    const double v = objective(to_parameters(init), g);
    double gn = 0.0;
    for (double x : g) gn = std::max(gn, std::abs(x));
    result.log.push_back({0, v, gn, -v, elapsed()});
    if (on_log) on_log(result.log.back());
  }
  const auto res = lbfgs_minimize(fn, to_parameters(init), opt, [&](const LbfgsIteration& it) {
    result.log.push_back({it.iter, it.value, it.grad_norm, -it.value, elapsed()});
    if (on_log) on_log(result.log.back());
  });
  assign_parameters(result.model, res.x);
  result.status = res.status;
  return result;
}

std::vector<EvalRow> evaluate(const Model& model, const std::vector<Image>& images,
                              const std::vector<double>& sigma255_list, std::uint64_t seed, bool quantize) {
  if (images.empty()) throw ParameterError("evaluation needs at least one image");
  std::vector<EvalRow> rows;
  for (std::size_t s = 0; s < sigma255_list.size(); ++s) {
    const double sigma255 = sigma255_list[s];
    EvalRow row{sigma255, 0.0, 0.0};
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Image noisy = add_gaussian_noise(images[i], sigma255, mix_seed(seed, s * 1000003 + i), quantize);
      const Image out = sigma255 > 0.0 ? denoise(noisy, sigma2_from_255(sigma255), model) : noisy;
      row.input_psnr += psnr(noisy, images[i]);
      row.output_psnr += psnr(out, images[i]);
    }
    row.input_psnr /= static_cast<double>(images.size());
    row.output_psnr /= static_cast<double>(images.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dgcrf
