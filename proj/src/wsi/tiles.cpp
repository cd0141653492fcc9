#include "wsi/tiles.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace focusfuse {

std::vector<int> tile_origins(int dim, int tile, int overlap) {
  if (dim < 1) throw UsageError("image dimension must be positive");
  if (tile < 1 || overlap <= 0 || overlap >= tile) {
    throw UsageError("tile overlap must satisfy 0 < overlap < tile");
  }
  if (dim <= tile) return {0};
  const int stride = tile - overlap;
  const int n = (dim - tile + stride - 1) / stride + 1;
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(std::min(i * stride, dim - tile));
  return out;
}

TileGrid plan_tiles(int width, int height, int tile, int overlap) {
  TileGrid g;
  g.width = width;
  g.height = height;
  g.tile = tile;
  g.overlap = overlap;
  g.xs = tile_origins(width, tile, overlap);
  g.ys = tile_origins(height, tile, overlap);
  g.padded = width < tile || height < tile;
  return g;
}

std::vector<float> weight_profile(int tile, int overlap) {
  if (tile < 1 || overlap <= 0 || overlap >= tile) {
    throw UsageError("tile overlap must satisfy 0 < overlap < tile");
  }
  std::vector<float> p(static_cast<size_t>(tile));
  const double denom = overlap + 1.0;
  for (int i = 0; i < tile; ++i) {
    const double ramp = std::min(i + 1, tile - i) / denom;
    p[static_cast<size_t>(i)] = static_cast<float>(std::min(1.0, ramp));
  }
  return p;
}

Image make_weight_map(int tile, int overlap) {
  const std::vector<float> p = weight_profile(tile, overlap);
  Image w(1, tile, tile);
  for (int y = 0; y < tile; ++y) {
    for (int x = 0; x < tile; ++x) w.at(0, y, x) = p[static_cast<size_t>(y)] * p[static_cast<size_t>(x)];
  }
  return w;
}

Image extract_tile(const Image& img, int x, int y, int tile) {
  Image out(img.channels, tile, tile);
  for (int c = 0; c < img.channels; ++c) {
    for (int ty = 0; ty < tile; ++ty) {
      const int sy = std::clamp(y + ty, 0, img.height - 1);
      for (int tx = 0; tx < tile; ++tx) {
        out.at(c, ty, tx) = img.at(c, sy, std::clamp(x + tx, 0, img.width - 1));
      }
    }
  }
  return out;
}

Image merge_tiles(const TileGrid& grid, const std::vector<Image>& tiles) {
  if (static_cast<int64_t>(tiles.size()) != grid.count()) {
    throw UsageError("merge_tiles: " + std::to_string(tiles.size()) + " tiles for a grid of " +
                     std::to_string(grid.count()));
  }
  const int t = grid.tile;
  const std::vector<float> p = weight_profile(t, grid.overlap);
  std::vector<double> acc(static_cast<size_t>(3) * grid.width * grid.height);
  std::vector<double> wsum(static_cast<size_t>(grid.width) * grid.height);
  size_t i = 0;
  for (int y0 : grid.ys) {
    for (int x0 : grid.xs) {
      const Image& tile = tiles[i++];
      if (tile.channels != 3 || tile.height != t || tile.width != t) {
        throw ShapeError("merge_tiles: tile " + tile.shape_str() + " is not [3, T, T]");
      }
      for (int ty = 0; ty < t && y0 + ty < grid.height; ++ty) {
        for (int tx = 0; tx < t && x0 + tx < grid.width; ++tx) {
          const double w = double(p[static_cast<size_t>(ty)]) * p[static_cast<size_t>(tx)];
          const size_t idx = static_cast<size_t>(y0 + ty) * grid.width + (x0 + tx);
          wsum[idx] += w;
          for (int c = 0; c < 3; ++c) {
            acc[static_cast<size_t>(c) * grid.width * grid.height + idx] += w * tile.at(c, ty, tx);
          }
        }
      }
    }
  }
  Image out(3, grid.height, grid.width);
  const size_t plane = static_cast<size_t>(grid.width) * grid.height;
  for (int c = 0; c < 3; ++c) {
    for (size_t k = 0; k < plane; ++k) {
      out.data[c * plane + k] = static_cast<float>(acc[c * plane + k] / wsum[k]);
    }
  }
  return out;
}

}  // namespace focusfuse
