#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/image_io.hpp"
#include "dgcrf/synthetic.hpp"

using namespace dgcrf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dgcrf_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("pgm round trip is exact on the 8-bit grid") {
  Image img = synthetic_scene(17, 23, 3);
  for (double& p : img.pixels) p = quantize_to_byte(p);
  const auto path = scratch("round.pgm");
  save_image(img, path);
  const Image back = load_image(path);
  CHECK(back == img);
  CHECK(encode_pgm(back) == encode_pgm(img));
  CHECK(fs::file_size(path) == std::string("P5\n23 17\n255\n").size() + 17 * 23);
}

TEST_CASE("pgm header parsing") {
  std::string ok = "P5\n# a comment\n2 1\n255\n";
  ok += '\x00';
  ok += '\xff';
  const Image img = decode_pgm(bytes_of(ok));
  CHECK(img.width == 2);
  CHECK(img.pixels[1] == 1.0);

  CHECK_THROWS_AS(decode_pgm(bytes_of("P2\n2 1\n255\n00")), IoError);
  CHECK_THROWS_AS(decode_pgm(bytes_of("P5\n0 1\n255\n")), IoError);
  CHECK_THROWS_AS(decode_pgm(bytes_of("P5\n2 1\n65535\n\x01\x02\x03\x04")), IoError);
  CHECK_THROWS_WITH_AS(decode_pgm(bytes_of("P5\n2 2\n255\nab")), doctest::Contains("unexpected end"), IoError);
}

TEST_CASE("png grayscale decoding") {
  if (!png_supported()) return;
  static const unsigned char png[] = {
      0x89, 0x50, 0x4e, 0x47, 0xd,  0xa,  0x1a, 0xa,  0x0,  0x0,  0x0,  0xd,  0x49, 0x48, 0x44, 0x52, 0x0,  0x0,
      0x0,  0x3,  0x0,  0x0,  0x0,  0x2,  0x8,  0x0,  0x0,  0x0,  0x0,  0xb8, 0x1f, 0x39, 0xc6, 0x0,  0x0,  0x0,
      0x10, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x64, 0x70, 0x70, 0x60, 0x38, 0xf0, 0x9f, 0x1d, 0x0,  0x7,
      0x15, 0x2,  0x48, 0xdd, 0x6c, 0x9e, 0x7b, 0x0,  0x0,  0x0,  0x0,  0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60,
      0x82};
  const auto path = scratch("tiny.png");
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(png), sizeof png);
  const Image img = load_image(path);
  CHECK(img.height == 2);
  CHECK(img.width == 3);
  const int expect[] = {0, 64, 128, 192, 255, 7};
  for (int i = 0; i < 6; ++i) CHECK(img.pixels[i] * 255.0 == doctest::Approx(expect[i]));
}

TEST_CASE("directory listing and io errors") {
  const fs::path dir = fs::temp_directory_path() / "dgcrf_io_list";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_image(Image(4, 4, 0.5), dir / "b.pgm");
  save_image(Image(4, 4, 0.5), dir / "a.pgm");
  std::ofstream(dir / "notes.txt") << "x";
  const auto files = list_images(dir);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.pgm");
  CHECK_THROWS_AS(load_image(dir / "missing.pgm"), IoError);
  CHECK_THROWS_AS(save_image(Image(2, 2), dir / "no" / "such" / "dir.pgm"), IoError);
}
