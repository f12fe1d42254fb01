#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dgcrf/cli.hpp"
#include "dgcrf/errors.hpp"
#include "dgcrf/gmm.hpp"
#include "dgcrf/grad.hpp"
#include "dgcrf/image_io.hpp"
#include "dgcrf/inference.hpp"
#include "dgcrf/model_io.hpp"
#include "dgcrf/parallel.hpp"
#include "dgcrf/rng.hpp"
#include "dgcrf/synthetic.hpp"

namespace dgcrf::cli {

namespace {

constexpr double kReferenceSigma255 = 25.0;

std::string kebab(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

// Maps library failures onto the exit-code contract. Config problems are
// detected before `work` runs.
int guarded(std::ostream& err, const std::function<int()>& work) {
  try {
    return work();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ParameterError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

void require_file(const std::string& what, const std::filesystem::path& p) {
  if (p.empty()) throw ConfigError("missing required " + what);
  if (!std::filesystem::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
}

void require_dir(const std::string& what, const std::filesystem::path& p) {
  if (p.empty()) throw ConfigError("missing required " + what);
  if (!std::filesystem::is_directory(p)) throw ConfigError(what + " is not a directory: " + p.string());
}

void prepare_out_dir(const std::string& what, const std::filesystem::path& p) {
  if (p.empty()) throw ConfigError("missing required " + what);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw ConfigError("cannot create " + what + ": " + p.string());
}

void require_parent(const std::string& what, const std::filesystem::path& p) {
  if (p.empty()) throw ConfigError("missing required " + what);
  const auto parent = p.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError(what + " directory does not exist: " + parent.string());
  }
}

std::vector<Image> load_dir(const std::filesystem::path& dir, int limit) {
  auto files = list_images(dir);
  if (files.empty()) throw IoError("no .pgm/.png images in " + dir.string());
  if (limit > 0 && files.size() > static_cast<std::size_t>(limit)) files.resize(limit);
  std::vector<Image> out;
  for (const auto& f : files) out.push_back(load_image(f));
  return out;
}

std::vector<double> centered_patches(const std::vector<Image>& images, int d) {
  std::vector<double> out;
  for (const auto& img : images) {
    auto ps = extract_patches(img, d);
    for (std::size_t p = 0; p < ps.size(); ++p) center_in_place(ps.patch(p));
    out.insert(out.end(), ps.values.begin(), ps.values.end());
  }
  return out;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::filesystem::path config;
  std::map<std::string, std::string> overrides;
};

Model initial_model(const RunConfig& rc, const std::vector<Image>& clean, std::ostream& out) {
  const auto& net = rc.train.network;
  if (!rc.init_model.empty()) {
    Model m = load_model(rc.init_model);
    if (!(m.config.d == net.d && m.config.K == net.K && m.config.T() == net.T())) {
      throw ConfigError("init_model does not match d/K/T of the config");
    }
    m.config = net;
    if (m.banks.size() != net.bank_count() ||
        m.layer_biases.size() != (net.has_layer_biases() ? static_cast<std::size_t>(net.T() - 1) : 0)) {
      return Model::from_bank(net, m.banks.front());
    }
    return m;
  }
  PotentialBank bank;
  if (rc.init_mode == "random") {
    bank = random_init(net.K, net.d, mix_seed(rc.train.seed, 1), rc.init_scale);
  } else {
    const auto pairs = make_training_pairs(clean, rc.train);
    std::vector<Image> crops;
    for (const auto& p : pairs) crops.push_back(p.clean);
    GmmOptions opt;
    opt.K = net.K;
    opt.em_iters = rc.em_iters;
    opt.seed = mix_seed(rc.train.seed, 2);
    bank = gmm_init(centered_patches(crops, net.d), net.d, opt, sigma2_from_255(kReferenceSigma255));
    out << "gmm init: K=" << net.K << " d=" << net.d << "\n";
  }
  return Model::from_bank(net, bank);
}

// Sampled central-difference check of the training objective on the first
// pair; full checks are the job of `gradcheck`.
void preflight(const RunConfig& rc, const std::vector<Image>& clean, const Model& init, std::ostream& out) {
  if (rc.preflight_samples == 0) return;
  auto pairs = make_training_pairs({clean.front()}, rc.train);
  TrainingObjective obj(std::move(pairs), init);
  const auto theta = to_parameters(init);
  std::vector<double> g(theta.size());
  obj(theta, g);
  GaussianSource rng(mix_seed(rc.train.seed, 3));
  GradientBlock block{"sampled", {}};
  const auto blocks = parameter_blocks(init);
  // Spread samples over all blocks.
  for (int s = 0; s < rc.preflight_samples; ++s) {
    const auto& b = blocks[static_cast<std::size_t>(s) % blocks.size()];
    block.indices.push_back(b.indices[static_cast<std::size_t>(rng.uniform() * b.indices.size())]);
  }
  const double eps[] = {1e-4, 1e-5, 1e-6};
  const auto report = finite_diff_check([&](std::span<const double> t) { return obj.value(t); }, theta, g,
                                        {block}, eps, 1e-4);
  out << "preflight gradient check:\n" << report.table();
  if (!report.all_passed()) throw NumericError("preflight gradient check failed");
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::map<std::string, std::string> settings;
    if (!args.config.empty()) settings = read_config_file(args.config);
    for (const auto& [k, v] : args.overrides) settings[k] = v;
    const RunConfig rc = make_run_config(settings);
    require_dir("train_dir", rc.train_dir);
    prepare_out_dir("out_dir", rc.out_dir);
    if (!rc.init_model.empty()) require_file("init_model", rc.init_model);
    if (rc.threads) set_thread_count(rc.threads);

    const auto clean = load_dir(rc.train_dir, rc.max_images);
    const Model init = initial_model(rc, clean, out);
    preflight(rc, clean, init, out);

    std::ofstream log(rc.out_dir / "train.log");
    if (!log) throw IoError("cannot write " + (rc.out_dir / "train.log").string());
    log << "# iter loss grad_norm mean_psnr seconds\n";
    auto on_log = [&](const TrainLogEntry& e) {
      std::ostringstream line;
      line << e.iter << " " << std::setprecision(10) << e.loss << " " << e.grad_norm << " " << e.mean_psnr << " "
           << std::setprecision(4) << e.seconds;
      log << line.str() << "\n" << std::flush;
      out << "iter " << e.iter << "  loss " << fmt(e.loss, 6) << "  |g| " << std::scientific << std::setprecision(3)
          << e.grad_norm << std::defaultfloat << "  psnr " << fmt(e.mean_psnr) << "  " << fmt(e.seconds, 1) << "s\n";
    };
    const auto res = train(clean, rc.train, init, on_log);
    save_model(res.model, rc.out_dir / "model.dgcrf");
    out << "status " << to_string(res.status) << "\nwrote " << (rc.out_dir / "model.dgcrf").string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::filesystem::path model, input, output, clean;
  double sigma = -1.0;
};

int cmd_denoise(const DenoiseArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_file("--model", a.model);
    require_file("--input", a.input);
    require_parent("--output", a.output);
    if (!a.clean.empty()) require_file("--clean", a.clean);
    if (!(a.sigma > 0.0)) throw ConfigError("--sigma must be positive");
    const Model m = load_model(a.model);
    const Image x = load_image(a.input);
    const Image y = denoise(x, sigma2_from_255(a.sigma), m);
    save_image(y, a.output);
    if (!a.clean.empty()) {
      const Image c = load_image(a.clean);
      const Image yq = load_image(a.output);
      out << "input_psnr=" << fmt(psnr(x, c)) << " output_psnr=" << fmt(psnr(yq, c)) << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::filesystem::path model, test_dir, csv = "eval.csv";
  std::string sigmas = "10,15,20,25,30";
  std::uint64_t seed = 1;
  bool quantize = true;
  int max_images = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_file("--model", a.model);
    if (a.test_dir.empty()) throw ConfigError("missing required --test-dir");
    require_parent("--csv", a.csv);
    const auto sigmas = parse_list("--sigmas", a.sigmas);
    for (double s : sigmas)
      if (s < 0.0) throw ConfigError("--sigmas must be non-negative");
    const Model m = load_model(a.model);
    if (!std::filesystem::is_directory(a.test_dir)) throw IoError("test directory not found: " + a.test_dir.string());
    const auto images = load_dir(a.test_dir, a.max_images);
    const auto rows = evaluate(m, images, sigmas, a.seed, a.quantize);

    out << std::right << std::setw(8) << "sigma" << std::setw(14) << "input_psnr" << std::setw(14)
        << "output_psnr" << std::setw(10) << "gain" << "\n";
    std::ostringstream csv;
    csv << "sigma,input_psnr,output_psnr\n";
    for (const auto& r : rows) {
      out << std::setw(8) << fmt(r.sigma255, 1) << std::setw(14) << fmt(r.input_psnr) << std::setw(14)
          << fmt(r.output_psnr) << std::setw(10) << fmt(r.output_psnr - r.input_psnr) << "\n";
      csv << fmt(r.sigma255, 4) << "," << fmt(r.input_psnr, 6) << "," << fmt(r.output_psnr, 6) << "\n";
    }
    std::ofstream f(a.csv, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + a.csv.string());
    f << csv.str();
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  int d = 3, K = 4, T = 2, size = 12;
  std::uint64_t seed = 1;
  double sigma = 25.0;
  std::string eps;
  bool cascade = true, share_bank = true, share_bias = true;
  std::string softmax = "exponential";
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.d < 2 || a.d > 4) throw ConfigError("gradcheck needs 2 <= d <= 4");
    if (a.K < 1 || a.K > 8) throw ConfigError("gradcheck needs 1 <= K <= 8");
    if (a.T < 1 || a.T > 3) throw ConfigError("gradcheck needs 1 <= T <= 3");
    if (a.size < a.d || a.size > 32) throw ConfigError("gradcheck needs d <= size <= 32");
    if (!(a.sigma > 0.0)) throw ConfigError("--sigma must be positive");
    std::vector<double> eps{1e-3, 1e-4, 1e-5, 1e-6};
    if (!a.eps.empty()) eps = parse_list("--eps", a.eps);

    NetworkConfig net;
    net.d = a.d;
    net.K = a.K;
    net.schedule = HQSSchedule::standard(a.T);
    net.cascade = a.cascade;
    net.share_bank = a.share_bank;
    net.share_bias = a.share_bias;
    if (a.softmax == "normalized") net.softmax = SoftmaxVariant::Normalized;
    else if (a.softmax != "exponential") throw ConfigError("--softmax must be exponential or normalized");
    PotentialBank bank = random_init(a.K, a.d, mix_seed(a.seed, 1), 0.5);
    // Ψ of order σ² keeps βΨ near 1, where every layer does real work.
    const double psi_scale = a.sigma / 255.0;
    for (auto& r : bank.factors_psi)
      for (double& v : r.flat()) v *= psi_scale;
    GaussianSource rng(mix_seed(a.seed, 2));
    for (double& b : bank.biases) b = rng.normal();
    Model model = Model::from_bank(net, bank);
    // Distinct per-layer biases so their gradients are not symmetric.
    for (auto& lb : model.layer_biases)
      for (double& b : lb) b = rng.normal();

    const Image clean = synthetic_scene(a.size, a.size, mix_seed(a.seed, 3));
    const Image noisy = add_gaussian_noise(clean, a.sigma, mix_seed(a.seed, 4), false);
    const double sigma2 = sigma2_from_255(a.sigma);

    // θ = (model parameters, input image).
    const std::size_t np = parameter_count(model);
    std::vector<double> theta = to_parameters(model);
    theta.insert(theta.end(), noisy.pixels.begin(), noisy.pixels.end());
    auto split = [&](std::span<const double> t, Model& m, Image& x) {
      assign_parameters(m, t.first(np));
      x = Image(noisy.height, noisy.width, std::vector<double>(t.begin() + np, t.end()));
    };
    auto objective = [&](std::span<const double> t) {
      Model m = model;
      Image x;
      split(t, m, x);
      return psnr_loss(denoise(x, sigma2, m), clean).loss;
    };

    const auto fwd = dgcrf_forward(noisy, sigma2, model);
    const auto loss = psnr_loss(fwd.output, clean);
    const auto grads = backprop_dgcrf(loss.grad, fwd.cache, model);
    std::vector<double> analytic = flatten_gradients(grads, model);
    analytic.insert(analytic.end(), grads.dX.pixels.begin(), grads.dX.pixels.end());
    if (a.corrupt)
      for (double& g : analytic) g *= 1.1;

    auto blocks = parameter_blocks(model);
    GradientBlock xb{"X", {}};
    for (std::size_t i = 0; i < noisy.size(); ++i) xb.indices.push_back(np + i);
    blocks.push_back(std::move(xb));

    const auto report = finite_diff_check(objective, theta, analytic, blocks, eps, 1e-4);
    out << "gradcheck d=" << a.d << " K=" << a.K << " T=" << a.T << " image=" << a.size << "x" << a.size
        << " seed=" << a.seed << "\n"
        << report.table();
    out << (report.all_passed() ? "all blocks passed\n" : "gradient check FAILED\n");
    return static_cast<int>(report.all_passed() ? kExitOk : kExitGradcheck);
  });
}

// ---------------------------------------------------------------- init

struct InitArgs {
  std::string mode = "random";
  std::filesystem::path patch_dir, out;
  int d = 5, K = 16, T = 4, em_iters = 30;
  double scale = 0.1;
  std::uint64_t seed = 1;
};

int cmd_init(const InitArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.mode != "gmm" && a.mode != "random") throw ConfigError("--mode must be gmm or random");
    require_parent("--out", a.out);
    NetworkConfig net;
    net.d = a.d;
    net.K = a.K;
    try {
      net.schedule = HQSSchedule::standard(a.T);
      net.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    if (a.T < 1) throw ConfigError("--T must be at least 1");
    if (a.scale < 0.0) throw ConfigError("--scale must be non-negative");
    PotentialBank bank;
    if (a.mode == "random") {
      bank = random_init(a.K, a.d, a.seed, a.scale);
    } else {
      require_dir("--patch-dir", a.patch_dir);
      if (a.em_iters < 1) throw ConfigError("--em-iters must be positive");
      const auto images = load_dir(a.patch_dir, 0);
      GmmOptions opt;
      opt.K = a.K;
      opt.em_iters = a.em_iters;
      opt.seed = a.seed;
      bank = gmm_init(centered_patches(images, a.d), a.d, opt, sigma2_from_255(kReferenceSigma255));
    }
    save_model(Model::from_bank(net, bank), a.out);
    out << "wrote " << a.out.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- noise

struct NoiseArgs {
  std::filesystem::path input, output;
  double sigma = -1.0;
  std::uint64_t seed = 1;
  bool quantize = true;
};

int cmd_noise(const NoiseArgs& a, std::ostream&, std::ostream& err) {
  return guarded(err, [&] {
    require_file("--input", a.input);
    require_parent("--output", a.output);
    if (a.sigma < 0.0) throw ConfigError("--sigma must be non-negative");
    save_image(add_gaussian_noise(load_image(a.input), a.sigma, a.seed, a.quantize), a.output);
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::filesystem::path out_dir;
  int count = 10, size = 64;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    prepare_out_dir("--out-dir", a.out_dir);
    if (a.count < 1 || a.size < 2) throw ConfigError("--count and --size must be positive");
    const auto scenes = synthetic_scenes(a.count, a.size, a.size, a.seed);
    for (int i = 0; i < a.count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "scene_%03d.pgm", i);
      save_image(scenes[i], a.out_dir / name);
    }
    out << "wrote " << a.count << " scenes to " << a.out_dir.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep Gaussian CRF image denoiser"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model end to end with L-BFGS");
  train_cmd->add_option("--config", ta.config, "key = value config file");
  std::map<std::string, std::string> flag_values;
  for (const auto& key : config_keys()) {
    train_cmd->add_option("--" + kebab(key), flag_values[key], "Overrides config key " + key);
  }

  DenoiseArgs da;
  auto* denoise_cmd = app.add_subcommand("denoise", "Denoise one image");
  denoise_cmd->add_option("--model", da.model)->required();
  denoise_cmd->add_option("--input", da.input)->required();
  denoise_cmd->add_option("--sigma", da.sigma, "Noise standard deviation on the 0-255 scale")->required();
  denoise_cmd->add_option("--output", da.output)->required();
  denoise_cmd->add_option("--clean", da.clean, "Reference image for a PSNR report");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR table over a directory of clean images");
  eval_cmd->add_option("--model", ea.model)->required();
  eval_cmd->add_option("--test-dir", ea.test_dir)->required();
  eval_cmd->add_option("--sigmas", ea.sigmas, "Comma-separated noise levels")->capture_default_str();
  eval_cmd->add_option("--seed", ea.seed)->capture_default_str();
  eval_cmd->add_option("--quantize", ea.quantize, "Quantize noisy images to 8 bits")->capture_default_str();
  eval_cmd->add_option("--csv", ea.csv, "CSV output path")->capture_default_str();
  eval_cmd->add_option("--max-images", ea.max_images, "Use at most this many images (0 = all)");

  GradcheckArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient block");
  grad_cmd->add_option("--d", ga.d)->capture_default_str();
  grad_cmd->add_option("--K", ga.K)->capture_default_str();
  grad_cmd->add_option("--T", ga.T)->capture_default_str();
  grad_cmd->add_option("--size", ga.size, "Image side length")->capture_default_str();
  grad_cmd->add_option("--sigma", ga.sigma)->capture_default_str();
  grad_cmd->add_option("--seed", ga.seed)->capture_default_str();
  grad_cmd->add_option("--eps", ga.eps, "Comma-separated step sizes");
  grad_cmd->add_option("--cascade", ga.cascade)->capture_default_str();
  grad_cmd->add_option("--share-bank", ga.share_bank)->capture_default_str();
  grad_cmd->add_option("--share-bias", ga.share_bias)->capture_default_str();
  grad_cmd->add_option("--softmax", ga.softmax)->capture_default_str();
  grad_cmd->add_flag("--corrupt", ga.corrupt)->group("");

  InitArgs ia;
  auto* init_cmd = app.add_subcommand("init", "Write an initial model");
  init_cmd->add_option("--mode", ia.mode, "gmm or random")->capture_default_str();
  init_cmd->add_option("--patch-dir", ia.patch_dir, "Clean images for GMM fitting");
  init_cmd->add_option("--d", ia.d)->capture_default_str();
  init_cmd->add_option("--K", ia.K)->capture_default_str();
  init_cmd->add_option("--T", ia.T)->capture_default_str();
  init_cmd->add_option("--em-iters", ia.em_iters)->capture_default_str();
  init_cmd->add_option("--scale", ia.scale, "Random factor perturbation")->capture_default_str();
  init_cmd->add_option("--seed", ia.seed)->capture_default_str();
  init_cmd->add_option("--out", ia.out)->required();

  NoiseArgs na;
  auto* noise_cmd = app.add_subcommand("noise", "Add seeded Gaussian noise to an image");
  noise_cmd->add_option("--input", na.input)->required();
  noise_cmd->add_option("--sigma", na.sigma)->required();
  noise_cmd->add_option("--seed", na.seed)->capture_default_str();
  noise_cmd->add_option("--quantize", na.quantize)->capture_default_str();
  noise_cmd->add_option("--output", na.output)->required();

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Write procedural test scenes")->group("");
  synth_cmd->add_option("--out-dir", sa.out_dir)->required();
  synth_cmd->add_option("--count", sa.count);
  synth_cmd->add_option("--size", sa.size);
  synth_cmd->add_option("--seed", sa.seed);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  }

  set_thread_count(threads);
  if (*train_cmd) {
    for (const auto& key : config_keys()) {
      if (train_cmd->count("--" + kebab(key)) > 0) ta.overrides[key] = flag_values[key];
    }
    return cmd_train(ta, out, err);
  }
  if (*denoise_cmd) return cmd_denoise(da, out, err);
  if (*eval_cmd) return cmd_eval(ea, out, err);
  if (*grad_cmd) return cmd_gradcheck(ga, out, err);
  if (*init_cmd) return cmd_init(ia, out, err);
  if (*noise_cmd) return cmd_noise(na, out, err);
  if (*synth_cmd) return cmd_synth(sa, out, err);
  return kExitConfig;
}

}  // namespace dgcrf::cli
