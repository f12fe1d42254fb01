#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "dgcrf/pgnet.hpp"

namespace dgcrf {

// β schedule stored as dimensionless multipliers of 1/σ².
struct HQSSchedule {
  std::vector<double> multipliers;

  // First T entries of [1, 4, 8, 16, 32, 64]; T ≤ 6.
  static HQSSchedule standard(int T);
  int layers() const { return static_cast<int>(multipliers.size()); }
  std::vector<double> resolve(double sigma2) const;
  // Positive and non-decreasing; throws ParameterError.
  void validate() const;
  bool operator==(const HQSSchedule&) const = default;
};

struct NetworkConfig {
  int d = 5;
  int K = 16;
  HQSSchedule schedule = HQSSchedule::standard(4);
  bool cascade = true;
  bool share_bank = true;
  bool share_bias = true;
  SoftmaxVariant softmax = SoftmaxVariant::Exponential;

  int T() const { return schedule.layers(); }
  // Without cascade there is a single PgNet, hence a single bank.
  bool separate_banks() const { return !share_bank && cascade; }
  std::size_t bank_count() const { return separate_banks() ? static_cast<std::size_t>(std::max(T(), 1)) : 1; }
  // Separate biases for layers 1..T−1 on top of a shared bank.
  bool has_layer_biases() const { return share_bank && !share_bias && cascade && T() > 1; }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// A configured network: banks (1 shared or one per PgNet) plus optional
// per-layer biases.
struct Model {
  NetworkConfig config;
  std::vector<PotentialBank> banks;
  std::vector<std::vector<double>> layer_biases;  // layers 1..T−1

  static Model from_bank(const NetworkConfig& config, const PotentialBank& init);

  std::size_t bank_index(int t) const { return config.separate_banks() ? static_cast<std::size_t>(t) : 0; }
  const PotentialBank& bank_for_layer(int t) const { return banks[bank_index(t)]; }
  std::span<const double> biases_for_layer(int t) const;

  void validate() const;
  bool operator==(const Model&) const = default;
};

// Flat parameter vector: for each bank the lower triangles (row-major) of
// P_1..P_K, then R_1..R_K, then b; then any per-layer bias vectors.
std::size_t parameter_count(const Model& m);
std::vector<double> to_parameters(const Model& m);
void assign_parameters(Model& m, std::span<const double> theta);

}  // namespace dgcrf
