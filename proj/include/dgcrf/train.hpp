#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dgcrf/image.hpp"
#include "dgcrf/lbfgs.hpp"
#include "dgcrf/model.hpp"

namespace dgcrf {

struct TrainConfig {
  NetworkConfig network;
  std::vector<double> sigma255_list{15.0, 25.0};
  int lbfgs_memory = 10;
  int max_iters = 200;
  double c1 = 1e-4;
  double c2 = 0.9;
  double grad_tol = 1e-10;
  double value_tol = 1e-14;
  std::uint64_t seed = 1;
  int crop_size = 64;
  bool quantize_noise = true;

  void validate() const;
};

struct TrainingPair {
  Image clean;
  Image noisy;
  double sigma255 = 0.0;
};

// One crop per image at a seeded offset, σ cycling through sigma255_list,
// noise seeded per pair. Fixed for the whole run.
std::vector<TrainingPair> make_training_pairs(const std::vector<Image>& clean, const TrainConfig& config);

struct LossResult {
  double loss = 0.0;  // −PSNR in dB, peak 1
  Image grad;         // d loss / d Yhat
  bool zero_mse = false;
};

LossResult psnr_loss(const Image& yhat, const Image& target);

// Mean negative PSNR over a fixed set of pairs, as a function of the flat
// parameter vector of `shape`.
class TrainingObjective {
 public:
  TrainingObjective(std::vector<TrainingPair> pairs, Model shape);

  double operator()(std::span<const double> theta, std::span<double> grad) const;
  double value(std::span<const double> theta) const;
  const std::vector<TrainingPair>& pairs() const { return pairs_; }
  const Model& shape() const { return shape_; }

 private:
  std::vector<TrainingPair> pairs_;
  Model shape_;
};

struct TrainLogEntry {
  int iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double mean_psnr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<TrainLogEntry> log;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
};

TrainResult train(const std::vector<Image>& clean, const TrainConfig& config, const Model& init,
                  const std::function<void(const TrainLogEntry&)>& on_log = {});

struct EvalRow {
  double sigma255 = 0.0;
  double input_psnr = 0.0;
  double output_psnr = 0.0;
};

// Mean PSNR of noisy and denoised images per σ. σ = 0 passes the input
// through unchanged.
std::vector<EvalRow> evaluate(const Model& model, const std::vector<Image>& images,
                              const std::vector<double>& sigma255_list, std::uint64_t seed, bool quantize);

inline double sigma2_from_255(double sigma255) { return (sigma255 / 255.0) * (sigma255 / 255.0); }

}  // namespace dgcrf
