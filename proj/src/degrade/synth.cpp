#include "degrade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace focusfuse {
namespace {

struct Rgb {
  double r, g, b;
};

// Coverage of an ellipse at a pixel, with a one-pixel anti-aliased rim.
double coverage(double dx, double dy, double a, double b, double c, double s) {
  const double u = (dx * c + dy * s) / a;
  const double v = (-dx * s + dy * c) / b;
  const double rho = std::hypot(u, v);
  return std::clamp((1.0 - rho) * std::min(a, b) + 0.5, 0.0, 1.0);
}

void paint(Image& img, int x, int y, const Rgb& col, double alpha) {
  float* p[3] = {&img.at(0, y, x), &img.at(1, y, x), &img.at(2, y, x)};
  const double v[3] = {col.r, col.g, col.b};
  for (int ch = 0; ch < 3; ++ch) *p[ch] = static_cast<float>(*p[ch] + alpha * (v[ch] - *p[ch]));
}

}  // namespace

Image synth_cytology(int height, int width, uint64_t seed, double cell_spacing) {
  if (height < 1 || width < 1) throw UsageError("synthetic image size must be positive");
  if (!(cell_spacing > 4.0)) throw UsageError("cell spacing must exceed 4 pixels");
  Image img(3, height, width);

  Rng bg(mix_seed(seed, 1));
  const double fx = bg.uniform(0.01, 0.03);
  const double fy = bg.uniform(0.01, 0.03);
  const double ph = bg.uniform(0.0, 2 * std::numbers::pi);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double wave = 0.03 * std::sin(fx * x + ph) * std::cos(fy * y - ph);
      img.at(0, y, x) = static_cast<float>(0.90 + wave + bg.uniform(-0.04, 0.04));
      img.at(1, y, x) = static_cast<float>(0.85 + wave + bg.uniform(-0.04, 0.04));
      img.at(2, y, x) = static_cast<float>(0.89 + wave + bg.uniform(-0.04, 0.04));
    }
  }

  Rng cells(mix_seed(seed, 2));
  const auto count = static_cast<int64_t>(
      std::ceil(double(height) * width / (cell_spacing * cell_spacing)));
  for (int64_t i = 0; i < count; ++i) {
    const double cx = cells.uniform(0.0, width);
    const double cy = cells.uniform(0.0, height);
    const double a = cells.uniform(0.22, 0.45) * cell_spacing;
    const double b = a * cells.uniform(0.6, 1.0);
    const double th = cells.uniform(0.0, std::numbers::pi);
    const Rgb cyto{cells.uniform(0.55, 0.8), cells.uniform(0.6, 0.8), cells.uniform(0.75, 0.92)};
    const double opacity = cells.uniform(0.45, 0.75);
    const double na = a * cells.uniform(0.22, 0.35);
    const double nb = na * cells.uniform(0.7, 1.0);
    const double ncx = cx + cells.uniform(-0.3, 0.3) * (a - na);
    const double ncy = cy + cells.uniform(-0.3, 0.3) * (b - nb);
    const Rgb nuc{cells.uniform(0.2, 0.35), cells.uniform(0.1, 0.25), cells.uniform(0.35, 0.55)};
    const uint64_t grain_seed = cells.next();

    const double c = std::cos(th);
    const double s = std::sin(th);
    const int x0 = std::max(0, static_cast<int>(cx - a - 2));
    const int x1 = std::min(width, static_cast<int>(cx + a + 3));
    const int y0 = std::max(0, static_cast<int>(cy - a - 2));
    const int y1 = std::min(height, static_cast<int>(cy + a + 3));
    Rng grain(grain_seed);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double cov = coverage(x - cx, y - cy, a, b, c, s);
        if (cov > 0.0) paint(img, x, y, cyto, cov * opacity);
        const double ncov = coverage(x - ncx, y - ncy, na, nb, c, s);
        if (ncov > 0.0) {
          const double t = grain.uniform(-0.12, 0.12);
          paint(img, x, y, Rgb{nuc.r + t, nuc.g + t, nuc.b + t}, ncov * 0.9);
        }
      }
    }
  }
  for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

}  // namespace focusfuse
