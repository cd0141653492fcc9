#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace focusfuse {

// Minimal BigTIFF: little-endian, one image, tiled, 8-bit RGB, chunky,
// uncompressed. The reader accepts exactly what the writer produces plus any
// other file inside that subset.
class BigTiffReader {
 public:
  explicit BigTiffReader(const std::string& path);
  ~BigTiffReader();
  BigTiffReader(const BigTiffReader&) = delete;
  BigTiffReader& operator=(const BigTiffReader&) = delete;

  int width() const { return width_; }
  int height() const { return height_; }
  int tile_width() const { return tile_w_; }
  int tile_height() const { return tile_h_; }

  // Interleaved RGB rows [y0, y0 + count), 3 * width bytes each.
  void read_rows(int y0, int count, uint8_t* dst);

 private:
  void load_tile_row(int ty);

  std::FILE* file_ = nullptr;
  std::string path_;
  int width_ = 0;
  int height_ = 0;
  int tile_w_ = 0;
  int tile_h_ = 0;
  std::vector<uint64_t> offsets_;
  std::vector<uint64_t> counts_;
  // Decoded cache of one row of tiles.
  int cached_ty_ = -1;
  std::vector<uint8_t> cache_;
};

class BigTiffWriter {
 public:
  BigTiffWriter(const std::string& path, int width, int height, int tile = 512);
  ~BigTiffWriter();
  BigTiffWriter(const BigTiffWriter&) = delete;
  BigTiffWriter& operator=(const BigTiffWriter&) = delete;

  // Rows must arrive in order, 3 * width bytes each.
  void write_rows(const uint8_t* rows, int count);
  // Writes the directory; throws unless every row was written.
  void finish();

 private:
  void flush_tile_row();

  std::FILE* file_ = nullptr;
  std::string path_;
  int width_ = 0;
  int height_ = 0;
  int tile_ = 0;
  int rows_written_ = 0;
  int buffered_ = 0;
  std::vector<uint8_t> band_;
  std::vector<uint64_t> offsets_;
  std::vector<uint64_t> counts_;
};

// True when the file starts with a little-endian BigTIFF header.
bool is_bigtiff(const std::string& path);

}  // namespace focusfuse
