#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dgcrf {

// Grayscale raster, row-major, intensities nominally in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, double fill = 0.0);
  Image(int h, int w, std::vector<double> data);

  std::size_t size() const { return pixels.size(); }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }

  bool operator==(const Image&) const = default;
};

// Layout of all fully-contained d×d windows of a height×width image,
// anchored at their top-left pixel and enumerated row-major.
struct PatchGeometry {
  int height = 0;
  int width = 0;
  int d = 0;

  int anchor_rows() const { return height - d + 1; }
  int anchor_cols() const { return width - d + 1; }
  std::size_t count() const { return static_cast<std::size_t>(anchor_rows()) * anchor_cols(); }
  std::size_t dim() const { return static_cast<std::size_t>(d) * d; }
  int anchor_row(std::size_t p) const { return static_cast<int>(p / anchor_cols()); }
  int anchor_col(std::size_t p) const { return static_cast<int>(p % anchor_cols()); }

  bool operator==(const PatchGeometry&) const = default;
};

// Validates 2 ≤ d ≤ min(height, width); throws ParameterError otherwise.
PatchGeometry make_patch_geometry(int height, int width, int d);

struct PatchPosition {
  int row;
  int col;
};

struct PatchSet {
  PatchGeometry geometry;
  std::vector<PatchPosition> positions;
  // count × d² values, each patch flattened row-major.
  std::vector<double> values;
  // height × width coverage N(i, j).
  std::vector<int> counts;

  std::size_t size() const { return positions.size(); }
  std::size_t dim() const { return geometry.dim(); }
  std::span<const double> patch(std::size_t p) const { return {values.data() + p * dim(), dim()}; }
  std::span<double> patch(std::size_t p) { return {values.data() + p * dim(), dim()}; }
};

PatchSet extract_patches(const Image& img, int d);
// Copies the window at patch p of `geometry` from `img` into out (d² values).
void gather_patch(const Image& img, const PatchGeometry& geometry, std::size_t p, std::span<double> out);
// Fixed-order (patch index, then row-major within patch) scatter-add.
Image accumulate_patches(const PatchGeometry& geometry, std::span<const double> values);
inline Image accumulate_patches(const PatchSet& ps) { return accumulate_patches(ps.geometry, ps.values); }
std::vector<int> coverage_counts(const PatchGeometry& geometry);

struct Centered {
  std::vector<double> centered;
  double mean;
};

// Applies G = I − (1/d²)11ᵀ.
Centered mean_subtract(std::span<const double> p);
double center_in_place(std::span<double> p);

inline constexpr double kPsnrCap = 99.0;

double mean_squared_error(const Image& a, const Image& b);
// 10 log10(peak² / MSE); kPsnrCap when MSE is zero.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// i.i.d. N(0, (sigma255/255)²) per pixel from GaussianSource(seed). With
// quantize, the result is clipped to [0, 1] and snapped to k/255. σ = 0
// returns the input unchanged.
Image add_gaussian_noise(const Image& img, double sigma255, std::uint64_t seed, bool quantize);

double quantize_to_byte(double v);
std::uint8_t to_byte(double v);

// 3×3 binomial blur ([1 2 1]ᵀ[1 2 1] / 16) with edge replication.
Image gaussian_blur3x3(const Image& img);

Image crop(const Image& img, int row, int col, int h, int w);

}  // namespace dgcrf
