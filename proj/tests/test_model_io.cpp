#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dgcrf/errors.hpp"
#include "dgcrf/model_io.hpp"
#include "helpers.hpp"

using namespace dgcrf;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

Model sample_model(bool share_bank, bool share_bias) {
  NetworkConfig net;
  net.d = 3;
  net.K = 4;
  net.schedule = HQSSchedule::standard(3);
  net.share_bank = share_bank;
  net.share_bias = share_bias;
  Model m = small_model(net, 12);
  GaussianSource rng(4);
  for (auto& b : m.banks)
    for (auto& f : b.factors_w) f(2, 1) += rng.normal();
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dgcrf_model_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("round trip is bit-identical for every sharing mode") {
  for (auto [sb, sbias] : {std::pair{true, true}, std::pair{false, true}, std::pair{true, false}}) {
    const Model m = sample_model(sb, sbias);
    const auto path = scratch("m.dgcrf");
    save_model(m, path);
    const Model back = load_model(path);
    CHECK(back == m);
    CHECK(encode_model(back) == encode_model(m));
    const std::size_t expected = model_header_bytes(3) + 8 * model_payload_count(m.config);
    CHECK(fs::file_size(path) == expected);
    CHECK(model_payload_count(m.config) == parameter_count(m) + m.banks.size() * 2 * 4 * (9 * 8 / 2));
  }
}

TEST_CASE("header layout") {
  const Model m = sample_model(true, true);
  const auto bytes = encode_model(m);
  CHECK(std::memcmp(bytes.data(), "DGCRF1", 6) == 0);
  std::uint32_t fields[5];
  std::memcpy(fields, bytes.data() + 6, sizeof fields);
  CHECK(fields[0] == kModelVersion);
  CHECK(fields[1] == 3);
  CHECK(fields[2] == 4);
  CHECK(fields[3] == 3);
  CHECK(fields[4] == (kFlagShareBank | kFlagShareBias | kFlagCascade));
  double beta1;
  std::memcpy(&beta1, bytes.data() + 26 + 8, 8);
  CHECK(beta1 == 4.0);
}

TEST_CASE("load errors are distinct") {
  const auto good = encode_model(sample_model(true, true));
  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("bad magic"), IoError);
  bad = good;
  bad[6] = 9;
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("version mismatch"), IoError);
  bad = good;
  bad.resize(bad.size() - 8);
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("size mismatch"), IoError);
  bad = good;
  bad.push_back(0);
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("size mismatch"), IoError);
  bad = good;
  const double nan = std::nan("");
  std::memcpy(bad.data() + bad.size() - 8, &nan, 8);
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("non-finite parameter"), IoError);
  bad = good;
  const double one = 1.0;
  // P_1(0, 1): first payload matrix, second element.
  std::memcpy(bad.data() + model_header_bytes(3) + 8, &one, 8);
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("upper triangle"), IoError);
  CHECK_THROWS_AS(load_model(scratch("does_not_exist.dgcrf")), IoError);
}

TEST_CASE("save refuses invalid factors") {
  Model m = sample_model(true, true);
  m.banks[0].factors_psi[1](0, 2) = 0.5;
  CHECK_THROWS_AS(save_model(m, scratch("bad.dgcrf")), ContractError);
}
