#include <doctest.h>

#include <cmath>

#include "dgcrf/errors.hpp"
#include "dgcrf/gmm.hpp"
#include "dgcrf/synthetic.hpp"
#include "dgcrf/train.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;

TEST_CASE("psnr loss value and gradient") {
  Image t(10, 10, 0.5), y(10, 10, 0.6);
  auto r = psnr_loss(y, t);
  CHECK(r.loss == doctest::Approx(-20.0));
  CHECK_FALSE(r.zero_mse);
  Image y2(10, 10, 0.7);
  CHECK(psnr_loss(y2, t).loss - r.loss == doctest::Approx(20.0 * std::log10(2.0)));

  const Image a = random_image(5, 6, 1), b = random_image(5, 6, 2);
  r = psnr_loss(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    Image p = a, m = a;
    p.pixels[i] += 1e-6;
    m.pixels[i] -= 1e-6;
    const double num = (psnr_loss(p, b).loss - psnr_loss(m, b).loss) / 2e-6;
    CHECK(std::abs(num - r.grad.pixels[i]) <= 1e-8 * std::max(1.0, std::abs(num)) + 1e-8);
  }
  const auto z = psnr_loss(b, b);
  CHECK(z.zero_mse);
  CHECK(z.loss == -kPsnrCap);
  for (double g : z.grad.pixels) CHECK(g == 0.0);
}

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.network.d = 3;
  c.network.K = 3;
  c.network.schedule = HQSSchedule::standard(2);
  c.crop_size = 16;
  c.max_iters = 3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("training pairs are deterministic and cycle sigma") {
  const auto clean = synthetic_scenes(4, 24, 20, 3);
  const auto c = tiny_config();
  const auto a = make_training_pairs(clean, c), b = make_training_pairs(clean, c);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].noisy == b[i].noisy);
    CHECK(a[i].clean.height == 16);
    CHECK(a[i].sigma255 == c.sigma255_list[i % 2]);
  }
  auto small = c;
  small.crop_size = 32;
  CHECK_THROWS_AS(make_training_pairs(clean, small), ParameterError);
}

TEST_CASE("zero iterations return the initial model") {
  auto c = tiny_config();
  c.max_iters = 0;
  const auto clean = synthetic_scenes(1, 16, 16, 1);
  const Model init = Model::from_bank(c.network, random_init(3, 3, 2, 0.1));
  const auto res = train(clean, c, init);
  CHECK(res.model == init);
}

TEST_CASE("training decreases the loss and is reproducible") {
  auto c = tiny_config();
  const auto clean = synthetic_scenes(3, 20, 20, 8);
  PotentialBank bank = random_init(3, 3, 2, 0.1);
  for (auto& r : bank.factors_psi)
    for (double& v : r.flat()) v *= 0.1;
  const Model init = Model::from_bank(c.network, bank);
  const auto a = train(clean, c, init);
  const auto b = train(clean, c, init);
  REQUIRE(a.log.size() >= 2);
  CHECK(a.log.back().loss < a.log.front().loss);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(a.log[i].grad_norm == b.log[i].grad_norm);
  }
  CHECK(a.model == b.model);
  for (std::size_t i = 1; i < a.log.size(); ++i) CHECK(a.log[i].loss <= a.log[i - 1].loss);
}

TEST_CASE("evaluation table") {
  NetworkConfig net;
  net.d = 3;
  net.K = 2;
  net.schedule = HQSSchedule::standard(2);
  const Model m = small_model(net, 4);
  const auto images = synthetic_scenes(2, 16, 16, 2);
  const auto rows = evaluate(m, images, {0.0, 25.0}, 7, true);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].input_psnr == kPsnrCap);
  CHECK(std::isfinite(rows[0].output_psnr));
  CHECK(rows[1].input_psnr < 25.0);
  const auto again = evaluate(m, images, {0.0, 25.0}, 7, true);
  CHECK(again[1].output_psnr == rows[1].output_psnr);
  CHECK_THROWS_AS(evaluate(m, {}, {25.0}, 1, true), ParameterError);
}

TEST_CASE("train config validation") {
  auto c = tiny_config();
  c.c1 = 0.95;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = tiny_config();
  c.sigma255_list.clear();
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = tiny_config();
  c.crop_size = 2;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}
