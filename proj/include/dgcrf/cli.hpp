#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dgcrf/train.hpp"

namespace dgcrf::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitGradcheck = 5,
};

// Raised for anything the operator must fix in the invocation or config file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  std::string init_mode = "gmm";  // gmm | random
  std::filesystem::path init_model;
  int em_iters = 30;
  double init_scale = 0.1;
  std::filesystem::path train_dir;
  std::filesystem::path test_dir;
  std::filesystem::path model;
  std::filesystem::path out_dir;
  std::vector<double> eval_sigmas{10, 15, 20, 25, 30};
  int max_images = 0;  // 0 = all
  int preflight_samples = 16;
  unsigned threads = 0;
};

// Keys accepted in config files (snake_case); the same keys are accepted as
// --kebab-case flags on `train`.
const std::vector<std::string>& config_keys();

// "key = value" lines, '#' comments, blank lines. Throws ConfigError on
// malformed lines, unknown or duplicate keys.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Applies settings in key order, then resolves T against beta_multipliers.
RunConfig make_run_config(const std::map<std::string, std::string>& settings);

std::vector<double> parse_list(std::string_view key, std::string_view text);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgcrf::cli
