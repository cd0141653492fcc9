#pragma once

#include <cstdint>

#include "image/image.hpp"

namespace focusfuse {

struct DegradeConfig {
  int min_regions = 1;
  int max_regions = 5;
  // Target fraction of the image covered by blurred regions (mask area).
  double min_area = 0.05;
  double max_area = 0.40;
  double min_sigma = 2.0;
  double max_sigma = 8.0;
  // Width in pixels of the alpha ramp straddling each region boundary.
  int feather = 8;

  void validate() const;
};

// Separable Gaussian, radius ceil(3 sigma), kernel normalized to 1, edge
// pixels replicated. Works on any channel count.
Image gaussian_blur(const Image& img, double sigma);

// Normalized 1-D kernel of length 2 ceil(3 sigma) + 1.
std::vector<double> gaussian_kernel(double sigma);

struct Degraded {
  Image image;
  // 1 where the blur alpha exceeds 0.5, else 0.
  Image mask;
  // Number of elliptical regions actually stamped.
  int regions = 0;
};

// Stamps disjoint feathered ellipses, each blurred with its own sigma.
// Pixels outside every feather band are copied unchanged.
Degraded degrade(const Image& img, const DegradeConfig& cfg, uint64_t seed);

// Sum of |horizontal| + |vertical| neighbour differences, over pairs whose
// both pixels have region[.] != 0 (or every pair when region is empty).
double total_variation(const Image& img, const Image& region = Image());

}  // namespace focusfuse
