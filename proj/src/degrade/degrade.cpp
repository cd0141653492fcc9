#include "degrade/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace focusfuse {
namespace {

struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
};

struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
};

double half_extent_x(const Ellipse& e) {
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  return std::sqrt(e.a * e.a * c * c + e.b * e.b * s * s);
}

double half_extent_y(const Ellipse& e) {
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  return std::sqrt(e.a * e.a * s * s + e.b * e.b * c * c);
}

// Blend weight at pixel centre (x, y): 1 well inside, 0 well outside, 0.5 on
// the boundary, linear in the first-order distance to the boundary.
double alpha_at(const Ellipse& e, double feather, int x, int y) {
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  const double dx = x - e.cx;
  const double dy = y - e.cy;
  const double u = (dx * c + dy * s) / e.a;
  const double v = (-dx * s + dy * c) / e.b;
  const double rho = std::hypot(u, v);
  if (rho < 1e-12) return 1.0;
  const double gx = (u * c / e.a - v * s / e.b) / rho;
  const double gy = (u * s / e.a + v * c / e.b) / rho;
  const double dist = (rho - 1.0) / std::hypot(gx, gy);
  return std::clamp(0.5 - dist / feather, 0.0, 1.0);
}

Box support(const Ellipse& e, double feather, int w, int h) {
  const double mx = half_extent_x(e) + feather;
  const double my = half_extent_y(e) + feather;
  return {std::max(0, static_cast<int>(std::floor(e.cx - mx))),
          std::max(0, static_cast<int>(std::floor(e.cy - my))),
          std::min(w, static_cast<int>(std::ceil(e.cx + mx)) + 1),
          std::min(h, static_cast<int>(std::ceil(e.cy + my)) + 1)};
}

// Samples `n` ellipses whose feather bands do not touch. Returns false when
// some region cannot be placed.
bool place_regions(Rng& rng, const DegradeConfig& cfg, int n, double area, int w, int h,
                   std::vector<Ellipse>& out, std::vector<uint8_t>& taken) {
  out.clear();
  std::fill(taken.begin(), taken.end(), 0);
  std::vector<double> share(static_cast<size_t>(n));
  double total = 0.0;
  for (double& s : share) total += (s = rng.uniform(0.5, 1.5));
  constexpr int kTries = 60;
  for (int i = 0; i < n; ++i) {
    const double px = area * w * h * share[static_cast<size_t>(i)] / total;
    bool placed = false;
    for (int t = 0; t < kTries && !placed; ++t) {
      Ellipse e;
      const double aspect = rng.uniform(0.67, 1.5);
      e.a = std::sqrt(px * aspect / std::numbers::pi);
      e.b = std::sqrt(px / (aspect * std::numbers::pi));
      e.theta = rng.uniform(0.0, std::numbers::pi);
      e.sigma = rng.uniform(cfg.min_sigma, cfg.max_sigma);
      const double ex = half_extent_x(e);
      const double ey = half_extent_y(e);
      if (2 * ex > w - 1 || 2 * ey > h - 1) continue;
      e.cx = rng.uniform(ex, w - 1 - ex);
      e.cy = rng.uniform(ey, h - 1 - ey);
      const Box box = support(e, cfg.feather, w, h);
      bool clash = false;
      for (int y = box.y0; y < box.y1 && !clash; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
          if (taken[static_cast<size_t>(y) * w + x] && alpha_at(e, cfg.feather, x, y) > 0.0) {
            clash = true;
            break;
          }
        }
      }
      if (clash) continue;
      // Reserve the band plus a one-pixel gap so neighbouring masks never touch.
      for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
          const bool near = alpha_at(e, cfg.feather, x, y) > 0.0 ||
                            (x > 0 && alpha_at(e, cfg.feather, x - 1, y) > 0.0) ||
                            (y > 0 && alpha_at(e, cfg.feather, x, y - 1) > 0.0) ||
                            (x + 1 < w && alpha_at(e, cfg.feather, x + 1, y) > 0.0) ||
                            (y + 1 < h && alpha_at(e, cfg.feather, x, y + 1) > 0.0);
          if (near) taken[static_cast<size_t>(y) * w + x] = 1;
        }
      }
      out.push_back(e);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace

void DegradeConfig::validate() const {
  if (min_regions < 0 || max_regions < min_regions) {
    throw UsageError("degrade: region count range is empty");
  }
  if (min_area < 0.0 || max_area < min_area || max_area >= 1.0) {
    throw UsageError("degrade: area fraction range must lie in [0, 1)");
  }
  if (!(min_sigma > 0.0) || max_sigma < min_sigma) {
    throw UsageError("degrade: sigma range must be positive");
  }
  if (feather < 1) throw UsageError("degrade: feather must be >= 1");
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw UsageError("gaussian blur sigma must be positive");
  }
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    sum += k[static_cast<size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width;
  const int h = img.height;
  Image tmp(img.channels, h, w);
  Image out(img.channels, h, w);
  std::vector<double> line;
  for (int c = 0; c < img.channels; ++c) {
    const float* src = img.channel(c);
    float* mid = tmp.channel(c);
    line.resize(static_cast<size_t>(w + 2 * r));
    for (int y = 0; y < h; ++y) {
      for (int x = -r; x < w + r; ++x) line[static_cast<size_t>(x + r)] = src[y * w + std::clamp(x, 0, w - 1)];
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (size_t i = 0; i < k.size(); ++i) acc += k[i] * line[static_cast<size_t>(x) + i];
        mid[y * w + x] = static_cast<float>(acc);
      }
    }
    float* dst = out.channel(c);
    line.resize(static_cast<size_t>(h + 2 * r));
    for (int x = 0; x < w; ++x) {
      for (int y = -r; y < h + r; ++y) line[static_cast<size_t>(y + r)] = mid[std::clamp(y, 0, h - 1) * w + x];
      for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (size_t i = 0; i < k.size(); ++i) acc += k[i] * line[static_cast<size_t>(y) + i];
        dst[y * w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Degraded degrade(const Image& img, const DegradeConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int w = img.width;
  const int h = img.height;
  Degraded out{img, Image(1, h, w), 0};
  Rng rng(mix_seed(seed, 0x646567));
  const double area = rng.uniform(cfg.min_area, cfg.max_area);
  int n = static_cast<int>(rng.uniform_int(cfg.min_regions, cfg.max_regions));
  if (area <= 0.0 || n == 0) return out;

  std::vector<Ellipse> regions;
  std::vector<uint8_t> taken(static_cast<size_t>(w) * h);
  while (n > 0 && !place_regions(rng, cfg, n, area, w, h, regions, taken)) --n;
  out.regions = static_cast<int>(regions.size());

  for (const Ellipse& e : regions) {
    const Box box = support(e, cfg.feather, w, h);
    // Blur only the region's support plus the kernel radius; inside the box
    // this equals blurring the whole image.
    const int r = static_cast<int>(std::ceil(3.0 * e.sigma));
    const int cx0 = std::max(0, box.x0 - r);
    const int cy0 = std::max(0, box.y0 - r);
    const int cx1 = std::min(w, box.x1 + r);
    const int cy1 = std::min(h, box.y1 + r);
    const Image blurred = gaussian_blur(crop(img, cx0, cy0, cx1 - cx0, cy1 - cy0), e.sigma);
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const double a = alpha_at(e, cfg.feather, x, y);
        if (a <= 0.0) continue;
        for (int c = 0; c < img.channels; ++c) {
          const double s = img.at(c, y, x);
          const double b = blurred.at(c, y - cy0, x - cx0);
          out.image.at(c, y, x) = static_cast<float>(s + a * (b - s));
        }
        if (a > 0.5) out.mask.at(0, y, x) = 1.0f;
      }
    }
  }
  return out;
}

double total_variation(const Image& img, const Image& region) {
  const bool all = region.empty();
  if (!all && (region.height != img.height || region.width != img.width)) {
    throw ShapeError("total_variation: region " + region.shape_str() + " does not match " +
                     img.shape_str());
  }
  auto in = [&](int y, int x) { return all || region.at(0, y, x) != 0.0f; };
  double tv = 0.0;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (!in(y, x)) continue;
        if (x + 1 < img.width && in(y, x + 1)) tv += std::abs(img.at(c, y, x + 1) - img.at(c, y, x));
        if (y + 1 < img.height && in(y + 1, x)) tv += std::abs(img.at(c, y + 1, x) - img.at(c, y, x));
      }
    }
  }
  return tv;
}

}  // namespace focusfuse
