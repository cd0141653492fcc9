#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "image/image.hpp"

namespace focusfuse {

// Reads an 8- or 16-bit PNG of any colour type. Alpha is dropped, palettes
// expanded, 16-bit samples reduced to 8. `channels` forces 1 (luma) or 3
// (gray replicated); 0 keeps the file's own count.
Image read_png(const std::string& path, int channels = 0);

// Writes 1- or 3-channel 8-bit PNG, values quantized with to_u8.
void write_png(const std::string& path, const Image& img);

// Header-only peek at dimensions and channel count (after alpha drop).
struct PngInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};
PngInfo png_info(const std::string& path);

// Row-at-a-time access for images too large to hold in memory. Rows are
// interleaved 8-bit RGB.
class PngRowReader {
 public:
  explicit PngRowReader(const std::string& path);
  ~PngRowReader();
  PngRowReader(const PngRowReader&) = delete;
  PngRowReader& operator=(const PngRowReader&) = delete;

  int width() const { return width_; }
  int height() const { return height_; }
  // Fills `row` (3 * width bytes) with the next row.
  void read_row(uint8_t* row);

 private:
  struct State;
  std::unique_ptr<State> state_;
  int width_ = 0;
  int height_ = 0;
};

class PngRowWriter {
 public:
  PngRowWriter(const std::string& path, int width, int height);
  ~PngRowWriter();
  PngRowWriter(const PngRowWriter&) = delete;
  PngRowWriter& operator=(const PngRowWriter&) = delete;

  void write_row(const uint8_t* row);
  // Flushes and closes; throws if fewer rows than `height` were written.
  void finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
  int height_ = 0;
  int rows_written_ = 0;
};

}  // namespace focusfuse
