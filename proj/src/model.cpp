#include "dgcrf/model.hpp"

#include <string>

#include "dgcrf/errors.hpp"

namespace dgcrf {

HQSSchedule HQSSchedule::standard(int T) {
  static constexpr double kBase[] = {1, 4, 8, 16, 32, 64};
  if (T < 0 || T > 6) throw ParameterError("standard schedule supports 0..6 layers, got " + std::to_string(T));
  return HQSSchedule{{kBase, kBase + T}};
}

std::vector<double> HQSSchedule::resolve(double sigma2) const {
  if (!(sigma2 > 0.0)) throw ParameterError("beta resolution needs sigma2 > 0");
  std::vector<double> out;
  out.reserve(multipliers.size());
  for (double m : multipliers) out.push_back(m / sigma2);
  return out;
}

void HQSSchedule::validate() const {
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    if (!(multipliers[i] > 0.0)) throw ParameterError("beta multipliers must be positive");
    if (i > 0 && multipliers[i] < multipliers[i - 1]) throw ParameterError("beta multipliers must be non-decreasing");
  }
}

void NetworkConfig::validate() const {
  if (d < 2) throw ParameterError("d must be at least 2");
  if (K < 1) throw ParameterError("K must be at least 1");
  schedule.validate();
}

Model Model::from_bank(const NetworkConfig& config, const PotentialBank& init) {
  config.validate();
  if (init.d != config.d || init.K != config.K) throw ParameterError("initial bank does not match d/K");
  Model m;
  m.config = config;
  m.banks.assign(config.bank_count(), init);
  if (config.has_layer_biases()) m.layer_biases.assign(config.T() - 1, init.biases);
  return m;
}

std::span<const double> Model::biases_for_layer(int t) const {
  if (t > 0 && config.has_layer_biases()) return layer_biases[t - 1];
  return bank_for_layer(t).biases;
}

void Model::validate() const {
  config.validate();
  if (banks.size() != config.bank_count()) throw ContractError("bank count does not match sharing flags");
  for (const auto& b : banks) {
    if (b.d != config.d || b.K != config.K) throw ContractError("bank shape does not match config");
    b.validate();
  }
  const std::size_t want = config.has_layer_biases() ? static_cast<std::size_t>(config.T() - 1) : 0;
  if (layer_biases.size() != want) throw ContractError("layer bias count does not match sharing flags");
  for (const auto& b : layer_biases)
    if (b.size() != static_cast<std::size_t>(config.K)) throw ContractError("layer bias length mismatch");
}

namespace {

std::size_t tri(std::size_t n) { return n * (n + 1) / 2; }

template <typename Visit>
void walk(Model& m, Visit&& visit) {
  for (auto& bank : m.banks) {
    const std::size_t n = bank.dim();
    for (auto* group : {&bank.factors_w, &bank.factors_psi})
      for (auto& f : *group)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j <= i; ++j) visit(f(i, j));
    for (double& b : bank.biases) visit(b);
  }
  for (auto& lb : m.layer_biases)
    for (double& b : lb) visit(b);
}

}  // namespace

std::size_t parameter_count(const Model& m) {
  std::size_t total = 0;
  for (const auto& b : m.banks) total += 2 * b.K * tri(b.dim()) + b.K;
  for (const auto& lb : m.layer_biases) total += lb.size();
  return total;
}

std::vector<double> to_parameters(const Model& m) {
  std::vector<double> out;
  out.reserve(parameter_count(m));
  walk(const_cast<Model&>(m), [&](double& v) { out.push_back(v); });
  return out;
}

void assign_parameters(Model& m, std::span<const double> theta) {
  if (theta.size() != parameter_count(m)) throw ContractError("parameter vector length mismatch");
  std::size_t i = 0;
  walk(m, [&](double& v) { v = theta[i++]; });
}

}  // namespace dgcrf
