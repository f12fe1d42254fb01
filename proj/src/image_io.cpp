#include "dgcrf/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "dgcrf/errors.hpp"

#ifdef DGCRF_HAVE_PNG
#include <png.h>
#endif

namespace dgcrf {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw IoError(std::string("invalid PGM header field: ") + field);
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw IoError(std::string("PGM header field out of range: ") + field);
      ++pos_;
    }
    return v;
  }

  std::size_t& pos() { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

#ifdef DGCRF_HAVE_PNG
Image decode_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  if (image.format != PNG_FORMAT_GRAY) {
    png_image_free(&image);
    throw IoError("unsupported format: PNG is not 8-bit grayscale");
  }
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Image img(static_cast<int>(image.height), static_cast<int>(image.width));
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = buf[i] / 255.0;
  return img;
}
#endif

}  // namespace

bool png_supported() {
#ifdef DGCRF_HAVE_PNG
  return true;
#else
  return false;
#endif
}

Image decode_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw IoError("unsupported format: missing P5 magic");
  }
  HeaderReader h(bytes);
  h.pos() = 2;
  const long width = h.read_int("width");
  const long height = h.read_int("height");
  const long maxval = h.read_int("maxval");
  if (width < 1) throw IoError("invalid PGM header field: width");
  if (height < 1) throw IoError("invalid PGM header field: height");
  if (maxval != 255) throw IoError("unsupported PGM maxval " + std::to_string(maxval) + " (expected 255)");
  std::size_t pos = h.pos();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError("unexpected end of pixel data");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < n) throw IoError("unexpected end of pixel data");
  Image img(static_cast<int>(height), static_cast<int>(width));
  for (std::size_t i = 0; i < n; ++i) img.pixels[i] = bytes[pos + i] / 255.0;
  return img;
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
#ifdef DGCRF_HAVE_PNG
    return decode_png(path);
#else
    throw IoError("unsupported format: PNG support not built");
#endif
  }
  return decode_pgm(bytes);
}

std::vector<std::uint8_t> encode_pgm(const Image& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : img.pixels) out.push_back(to_byte(v));
  return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace dgcrf
