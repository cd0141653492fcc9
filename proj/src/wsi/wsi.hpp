#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "image/image.hpp"
#include "wsi/tiles.hpp"

namespace focusfuse {

// Sequential row access to a large RGB image (PNG or tiled BigTIFF).
class RowSource {
 public:
  virtual ~RowSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  // Next `count` rows, interleaved 8-bit RGB; calls must cover rows in order.
  virtual void read_rows(int count, uint8_t* dst) = 0;
};

class RowSink {
 public:
  virtual ~RowSink() = default;
  virtual void write_rows(const uint8_t* rows, int count) = 0;
  virtual void finish() = 0;
};

// Picks the format from the file header (sources) or extension (.tif/.tiff
// sinks are BigTIFF, anything else PNG).
std::unique_ptr<RowSource> open_row_source(const std::string& path);
std::unique_ptr<RowSink> open_row_sink(const std::string& path, int width, int height);

// Reads a whole image through open_row_source, as unit-range floats.
Image read_big_image(const std::string& path);
void write_big_image(const std::string& path, const Image& img);

// Maps the k aligned input tiles ([3, T, T] each) to one [3, T, T] output tile.
using TileModel = std::function<Image(const std::vector<Image>& layers)>;

struct WsiSummary {
  int width = 0;
  int height = 0;
  int64_t tiles = 0;
  int tiles_x = 0;
  int tiles_y = 0;
  double seconds = 0.0;
  // Peak bytes held by the value-sum and weight-sum row bands.
  int64_t accumulator_bytes = 0;
  // Peak bytes of the rolling input row bands (all layers).
  int64_t input_band_bytes = 0;
};

// Streams the inputs band by band: for each row of tiles, reads the rows it
// needs, runs `model` per tile, accumulates weighted outputs, and writes out
// every row no later tile can touch. Memory is proportional to image width
// times the tile size, not to the image area.
WsiSummary fuse_wsi(const std::vector<std::string>& inputs, const std::string& output,
                    const TileModel& model, int tile = 512, int overlap = 128);

}  // namespace focusfuse
