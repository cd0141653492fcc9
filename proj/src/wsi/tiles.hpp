#pragma once

#include <cstdint>
#include <vector>

#include "image/image.hpp"

namespace focusfuse {

struct TileGrid {
  int width = 0;
  int height = 0;
  int tile = 512;
  int overlap = 128;
  // Tile origins per axis; the last one is clamped flush with the border.
  std::vector<int> xs;
  std::vector<int> ys;
  // The image is smaller than one tile along some axis; tiles are filled by
  // replicating edge pixels.
  bool padded = false;

  int stride() const { return tile - overlap; }
  int64_t count() const { return static_cast<int64_t>(xs.size()) * static_cast<int64_t>(ys.size()); }
};

// Origins 0, S, 2S, ... with the last clamped to dim - T; one origin at 0 when
// dim <= T.
std::vector<int> tile_origins(int dim, int tile, int overlap);
TileGrid plan_tiles(int width, int height, int tile = 512, int overlap = 128);

// 1-D weights: linear from 1/(O+1) at either edge up to 1 after O pixels.
std::vector<float> weight_profile(int tile, int overlap);
// Outer product of the profile with itself, [1, T, T].
Image make_weight_map(int tile, int overlap);

// Crop of `img` at (x, y) of size tile x tile, replicating edge pixels where
// the window leaves the image.
Image extract_tile(const Image& img, int x, int y, int tile);

// In-memory weighted merge; tiles in row-major grid order, each
// [3, T, T]. out(p) = sum w_i(p) tile_i(p) / sum w_i(p).
Image merge_tiles(const TileGrid& grid, const std::vector<Image>& tiles);

}  // namespace focusfuse
