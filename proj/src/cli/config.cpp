#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dgcrf/cli.hpp"
#include "dgcrf/errors.hpp"

namespace dgcrf::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + t + "'");
  }
  return v;
}

long long to_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + t + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + t + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "d",           "K",          "T",          "beta_multipliers", "sigma255_list", "cascade",
      "share_bank",  "share_bias", "softmax",    "lbfgs_memory",     "max_iters",     "c1",
      "c2",          "seed",       "crop_size",  "quantize_noise",   "init",          "init_model",
      "em_iters",    "init_scale", "train_dir",  "test_dir",         "model",         "out_dir",
      "eval_sigmas", "max_images", "preflight_samples", "threads"};
  return keys;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("empty list for " + std::string(key));
  return out;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!out.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig make_run_config(const std::map<std::string, std::string>& settings) {
  RunConfig rc;
  auto& tc = rc.train;
  auto& net = tc.network;
  int T = -1;
  std::vector<double> betas;
  for (const auto& [key, value] : settings) {
    if (key == "d") net.d = static_cast<int>(to_int(key, value));
    else if (key == "K") net.K = static_cast<int>(to_int(key, value));
    else if (key == "T") T = static_cast<int>(to_int(key, value));
    else if (key == "beta_multipliers") betas = parse_list(key, value);
    else if (key == "sigma255_list") tc.sigma255_list = parse_list(key, value);
    else if (key == "cascade") net.cascade = to_bool(key, value);
    else if (key == "share_bank") net.share_bank = to_bool(key, value);
    else if (key == "share_bias") net.share_bias = to_bool(key, value);
    else if (key == "softmax") {
      if (value == "exponential") net.softmax = SoftmaxVariant::Exponential;
      else if (value == "normalized") net.softmax = SoftmaxVariant::Normalized;
      else throw ConfigError("softmax must be 'exponential' or 'normalized', got '" + value + "'");
    } else if (key == "lbfgs_memory") tc.lbfgs_memory = static_cast<int>(to_int(key, value));
    else if (key == "max_iters") tc.max_iters = static_cast<int>(to_int(key, value));
    else if (key == "c1") tc.c1 = to_double(key, value);
    else if (key == "c2") tc.c2 = to_double(key, value);
    else if (key == "seed") tc.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "crop_size") tc.crop_size = static_cast<int>(to_int(key, value));
    else if (key == "quantize_noise") tc.quantize_noise = to_bool(key, value);
    else if (key == "init") {
      if (value != "gmm" && value != "random") throw ConfigError("init must be 'gmm' or 'random', got '" + value + "'");
      rc.init_mode = value;
    } else if (key == "init_model") rc.init_model = value;
    else if (key == "em_iters") rc.em_iters = static_cast<int>(to_int(key, value));
    else if (key == "init_scale") rc.init_scale = to_double(key, value);
    else if (key == "train_dir") rc.train_dir = value;
    else if (key == "test_dir") rc.test_dir = value;
    else if (key == "model") rc.model = value;
    else if (key == "out_dir") rc.out_dir = value;
    else if (key == "eval_sigmas") rc.eval_sigmas = parse_list(key, value);
    else if (key == "max_images") rc.max_images = static_cast<int>(to_int(key, value));
    else if (key == "preflight_samples") rc.preflight_samples = static_cast<int>(to_int(key, value));
    else if (key == "threads") rc.threads = static_cast<unsigned>(to_int(key, value));
    else throw ConfigError("unknown key '" + key + "'");
  }
  if (!betas.empty()) {
    if (T >= 0 && T != static_cast<int>(betas.size())) {
      throw ConfigError("T = " + std::to_string(T) + " does not match " + std::to_string(betas.size()) +
                        " beta_multipliers");
    }
    net.schedule.multipliers = betas;
  } else if (T >= 0) {
    try {
      net.schedule = HQSSchedule::standard(T);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("T: ") + e.what());
    }
  }
  if (net.T() < 1) throw ConfigError("T must be at least 1");
  if (rc.em_iters < 1) throw ConfigError("em_iters must be positive");
  if (rc.init_scale < 0.0) throw ConfigError("init_scale must be non-negative");
  if (rc.max_images < 0) throw ConfigError("max_images must be non-negative");
  if (rc.preflight_samples < 0) throw ConfigError("preflight_samples must be non-negative");
  try {
    tc.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

}  // namespace dgcrf::cli
