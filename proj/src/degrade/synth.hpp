#pragma once

#include <cstdint>

#include "image/image.hpp"

namespace focusfuse {

// Sharp cytology-like RGB test image: a pale, grainy background scattered
// with translucent cells, each with a dark textured nucleus. Pure function of
// (size, seed). `cell_spacing` is the mean distance between cell centres.
Image synth_cytology(int height, int width, uint64_t seed, double cell_spacing = 28.0);

}  // namespace focusfuse
