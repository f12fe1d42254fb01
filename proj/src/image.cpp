#include "dgcrf/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgcrf/errors.hpp"
#include "dgcrf/rng.hpp"

namespace dgcrf {

Image::Image(int h, int w, double fill) : height(h), width(w) {
  if (h < 1 || w < 1) throw ParameterError("image dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(h) * w, fill);
}

Image::Image(int h, int w, std::vector<double> data) : height(h), width(w), pixels(std::move(data)) {
  if (h < 1 || w < 1) throw ParameterError("image dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(h) * w) throw ParameterError("pixel buffer size mismatch");
}

PatchGeometry make_patch_geometry(int height, int width, int d) {
  if (d < 2) throw ParameterError("patch size must be at least 2, got " + std::to_string(d));
  if (d > height || d > width) {
    throw ParameterError("patch size " + std::to_string(d) + " exceeds image dimension " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  return {height, width, d};
}

void gather_patch(const Image& img, const PatchGeometry& g, std::size_t p, std::span<double> out) {
  const int r0 = g.anchor_row(p), c0 = g.anchor_col(p);
  for (int r = 0; r < g.d; ++r) {
    const double* src = img.pixels.data() + static_cast<std::size_t>(r0 + r) * img.width + c0;
    std::copy(src, src + g.d, out.data() + static_cast<std::size_t>(r) * g.d);
  }
}

std::vector<int> coverage_counts(const PatchGeometry& g) {
  std::vector<int> counts(static_cast<std::size_t>(g.height) * g.width, 0);
  for (std::size_t p = 0; p < g.count(); ++p) {
    const int r0 = g.anchor_row(p), c0 = g.anchor_col(p);
    for (int r = 0; r < g.d; ++r)
      for (int c = 0; c < g.d; ++c) ++counts[static_cast<std::size_t>(r0 + r) * g.width + c0 + c];
  }
  return counts;
}

PatchSet extract_patches(const Image& img, int d) {
  PatchSet ps;
  ps.geometry = make_patch_geometry(img.height, img.width, d);
  const std::size_t count = ps.geometry.count();
  ps.positions.reserve(count);
  ps.values.resize(count * ps.geometry.dim());
  for (std::size_t p = 0; p < count; ++p) {
    ps.positions.push_back({ps.geometry.anchor_row(p), ps.geometry.anchor_col(p)});
    gather_patch(img, ps.geometry, p, ps.patch(p));
  }
  ps.counts = coverage_counts(ps.geometry);
  return ps;
}

Image accumulate_patches(const PatchGeometry& g, std::span<const double> values) {
  if (values.size() != g.count() * g.dim()) throw ParameterError("patch values do not match geometry");
  Image out(g.height, g.width, 0.0);
  const std::size_t n = g.dim();
  for (std::size_t p = 0; p < g.count(); ++p) {
    const int r0 = g.anchor_row(p), c0 = g.anchor_col(p);
    const double* src = values.data() + p * n;
    for (int r = 0; r < g.d; ++r) {
      double* dst = out.pixels.data() + static_cast<std::size_t>(r0 + r) * g.width + c0;
      for (int c = 0; c < g.d; ++c) dst[c] += src[r * g.d + c];
    }
  }
  return out;
}

double center_in_place(std::span<double> p) {
  double s = 0.0;
  for (double v : p) s += v;
  const double mean = s / static_cast<double>(p.size());
  for (double& v : p) v -= mean;
  return mean;
}

Centered mean_subtract(std::span<const double> p) {
  Centered out{{p.begin(), p.end()}, 0.0};
  out.mean = center_in_place(out.centered);
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ParameterError("image dimensions differ: " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                         " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a.pixels[i] - b.pixels[i];
    s += e * e;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double peak) {
  if (!(peak > 0.0)) throw ParameterError("psnr peak must be positive");
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

std::uint8_t to_byte(double v) {
  const double clipped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::round(clipped * 255.0));
}

double quantize_to_byte(double v) { return static_cast<double>(to_byte(v)) / 255.0; }

Image add_gaussian_noise(const Image& img, double sigma255, std::uint64_t seed, bool quantize) {
  if (!(sigma255 >= 0.0)) throw ParameterError("noise sigma must be non-negative");
  Image out = img;
  if (sigma255 == 0.0) return out;
  GaussianSource src(seed);
  const double sigma = sigma255 / 255.0;
  for (double& v : out.pixels) v += sigma * src.normal();
  if (quantize) {
    for (double& v : out.pixels) v = quantize_to_byte(v);
  }
  return out;
}

Image gaussian_blur3x3(const Image& img) {
  Image out(img.height, img.width);
  static constexpr double w[3] = {0.25, 0.5, 0.25};
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = std::clamp(r + dr, 0, img.height - 1);
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = std::clamp(c + dc, 0, img.width - 1);
          acc += w[dr + 1] * w[dc + 1] * img.at(rr, cc);
        }
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

Image crop(const Image& img, int row, int col, int h, int w) {
  if (row < 0 || col < 0 || row + h > img.height || col + w > img.width) {
    throw ParameterError("crop window outside image");
  }
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(row + r, col + c);
  return out;
}

}  // namespace dgcrf
