#include "dgcrf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dgcrf/rng.hpp"

namespace dgcrf {

namespace {

struct Shape {
  int kind;  // 0 ellipse, 1 rotated rectangle, 2 half-plane
  double cx, cy, a, b, angle;
  double base, gx, gy;
  double stripe_amp, stripe_freq, stripe_angle;
};

bool inside(const Shape& s, double x, double y) {
  const double ca = std::cos(s.angle), sa = std::sin(s.angle);
  const double u = ca * (x - s.cx) + sa * (y - s.cy);
  const double v = -sa * (x - s.cx) + ca * (y - s.cy);
  switch (s.kind) {
    case 0: return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
    case 1: return std::abs(u) <= s.a && std::abs(v) <= s.b;
    default: return u >= 0.0;
  }
}

double shade(const Shape& s, double x, double y) {
  double v = s.base + s.gx * (x - s.cx) + s.gy * (y - s.cy);
  if (s.stripe_amp > 0.0) {
    const double t = std::cos(s.stripe_angle) * x + std::sin(s.stripe_angle) * y;
    v += s.stripe_amp * std::sin(2.0 * std::numbers::pi * s.stripe_freq * t);
  }
  return v;
}

}  // namespace

Image synthetic_scene(int height, int width, std::uint64_t seed) {
  GaussianSource rng(seed);
  auto U = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const double scale = std::max(height, width);

  Shape bg{2, width / 2.0, height / 2.0, 0, 0, 0, U(0.25, 0.75), U(-0.4, 0.4) / scale, U(-0.4, 0.4) / scale, 0, 0, 0};
  std::vector<Shape> shapes;
  const int n_shapes = 3 + static_cast<int>(rng.uniform() * 6);
  for (int i = 0; i < n_shapes; ++i) {
    Shape s{};
    s.kind = static_cast<int>(rng.uniform() * 3);
    s.cx = U(0, width);
    s.cy = U(0, height);
    s.a = U(0.08, 0.45) * scale;
    s.b = U(0.08, 0.45) * scale;
    s.angle = U(0, std::numbers::pi);
    s.base = U(0.1, 0.9);
    s.gx = U(-0.5, 0.5) / scale;
    s.gy = U(-0.5, 0.5) / scale;
    if (rng.uniform() < 0.25) {
      s.stripe_amp = U(0.03, 0.1);
      s.stripe_freq = U(0.05, 0.15);
      s.stripe_angle = U(0, std::numbers::pi);
    }
    shapes.push_back(s);
  }

  // 4×4 supersampling for anti-aliased edges.
  constexpr int kSub = 4;
  Image img(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double x = c + (sx + 0.5) / kSub;
          const double y = r + (sy + 0.5) / kSub;
          double v = shade(bg, x, y);
          for (const auto& s : shapes)
            if (inside(s, x, y)) v = shade(s, x, y);
          acc += v;
        }
      }
      img.at(r, c) = std::clamp(acc / (kSub * kSub), 0.0, 1.0);
    }
  }
  return img;
}

std::vector<Image> synthetic_scenes(int count, int height, int width, std::uint64_t seed) {
  std::vector<Image> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(synthetic_scene(height, width, mix_seed(seed, i)));
  return out;
}

}  // namespace dgcrf
