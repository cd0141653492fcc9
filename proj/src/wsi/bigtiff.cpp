#include "wsi/bigtiff.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "common/error.hpp"

namespace focusfuse {
namespace {

enum : uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kSamplesPerPixel = 277,
  kPlanarConfig = 284,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
};

enum : uint16_t { kShort = 3, kLong = 4, kLong8 = 16 };

size_t type_size(uint16_t type) {
  switch (type) {
    case kShort: return 2;
    case kLong: return 4;
    case kLong8: return 8;
    default: return 0;
  }
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t get_le(const uint8_t* p, size_t n) {
  uint64_t v = 0;
  for (size_t i = 0; i < n; ++i) v |= uint64_t{p[i]} << (8 * i);
  return v;
}

struct Entry {
  uint16_t type = 0;
  std::vector<uint64_t> values;
};

}  // namespace

bool is_bigtiff(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  uint8_t h[4] = {};
  const bool ok = std::fread(h, 1, 4, f) == 4 && h[0] == 'I' && h[1] == 'I' && h[2] == 43 && h[3] == 0;
  std::fclose(f);
  return ok;
}

BigTiffReader::BigTiffReader(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) throw IoError("cannot open '" + path + "'");
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("'" + path_ + "': " + why);
  };
  auto read_at = [&](uint64_t off, void* dst, size_t n) {
    if (std::fseek(file_, static_cast<long>(off), SEEK_SET) != 0 || std::fread(dst, 1, n, file_) != n) {
      throw fail("truncated file");
    }
  };
  uint8_t header[16];
  read_at(0, header, 16);
  if (header[0] != 'I' || header[1] != 'I') throw fail("not a little-endian TIFF");
  if (get_le(header + 2, 2) != 43) throw fail("not a BigTIFF file");
  if (get_le(header + 4, 2) != 8 || get_le(header + 6, 2) != 0) throw fail("unsupported BigTIFF offsets");
  const uint64_t ifd = get_le(header + 8, 8);

  uint8_t nbuf[8];
  read_at(ifd, nbuf, 8);
  const uint64_t n = get_le(nbuf, 8);
  if (n == 0 || n > 4096) throw fail("implausible directory size");
  std::vector<uint8_t> raw(static_cast<size_t>(n) * 20);
  read_at(ifd + 8, raw.data(), raw.size());
  std::map<uint16_t, Entry> tags;
  for (uint64_t i = 0; i < n; ++i) {
    const uint8_t* e = raw.data() + i * 20;
    Entry entry;
    const auto tag = static_cast<uint16_t>(get_le(e, 2));
    entry.type = static_cast<uint16_t>(get_le(e + 2, 2));
    const uint64_t count = get_le(e + 4, 8);
    const size_t sz = type_size(entry.type);
    if (sz == 0) continue;
    if (count > (uint64_t{1} << 28)) throw fail("implausible tag count");
    std::vector<uint8_t> data(static_cast<size_t>(count) * sz);
    if (data.size() <= 8) {
      std::memcpy(data.data(), e + 12, data.size());
    } else {
      read_at(get_le(e + 12, 8), data.data(), data.size());
    }
    for (uint64_t k = 0; k < count; ++k) entry.values.push_back(get_le(data.data() + k * sz, sz));
    tags[tag] = std::move(entry);
  }
  auto scalar = [&](uint16_t tag, const char* name) -> uint64_t {
    auto it = tags.find(tag);
    if (it == tags.end() || it->second.values.empty()) throw fail(std::string("missing ") + name);
    return it->second.values.front();
  };
  auto optional_scalar = [&](uint16_t tag, uint64_t fallback) {
    auto it = tags.find(tag);
    return it == tags.end() || it->second.values.empty() ? fallback : it->second.values.front();
  };
  width_ = static_cast<int>(scalar(kImageWidth, "ImageWidth"));
  height_ = static_cast<int>(scalar(kImageLength, "ImageLength"));
  if (!tags.contains(kTileWidth)) throw fail("only tiled BigTIFF is supported");
  tile_w_ = static_cast<int>(scalar(kTileWidth, "TileWidth"));
  tile_h_ = static_cast<int>(scalar(kTileLength, "TileLength"));
  if (optional_scalar(kCompression, 1) != 1) throw fail("compressed files are not supported");
  if (optional_scalar(kSamplesPerPixel, 1) != 3) throw fail("only RGB files are supported");
  if (optional_scalar(kPlanarConfig, 1) != 1) throw fail("only chunky pixel layout is supported");
  if (optional_scalar(kPhotometric, 2) != 2) throw fail("only RGB photometric is supported");
  for (uint64_t b : tags[kBitsPerSample].values) {
    if (b != 8) throw fail("only 8-bit samples are supported");
  }
  if (width_ < 1 || height_ < 1 || tile_w_ < 1 || tile_h_ < 1 || tile_w_ % 16 || tile_h_ % 16) {
    throw fail("invalid image or tile size");
  }
  offsets_ = tags[kTileOffsets].values;
  counts_ = tags[kTileByteCounts].values;
  const uint64_t across = (width_ + tile_w_ - 1) / tile_w_;
  const uint64_t down = (height_ + tile_h_ - 1) / tile_h_;
  if (offsets_.size() != across * down || counts_.size() != offsets_.size()) {
    throw fail("tile table does not match the image size");
  }
  const uint64_t tile_bytes = uint64_t{3} * tile_w_ * tile_h_;
  for (uint64_t c : counts_) {
    if (c != tile_bytes) throw fail("unexpected tile byte count");
  }
}

BigTiffReader::~BigTiffReader() {
  if (file_) std::fclose(file_);
}

void BigTiffReader::load_tile_row(int ty) {
  if (cached_ty_ == ty) return;
  const int across = (width_ + tile_w_ - 1) / tile_w_;
  const size_t row_bytes = size_t{3} * across * tile_w_;
  cache_.resize(row_bytes * tile_h_);
  std::vector<uint8_t> tile(size_t{3} * tile_w_ * tile_h_);
  for (int tx = 0; tx < across; ++tx) {
    const uint64_t off = offsets_[static_cast<size_t>(ty) * across + tx];
    if (std::fseek(file_, static_cast<long>(off), SEEK_SET) != 0 ||
        std::fread(tile.data(), 1, tile.size(), file_) != tile.size()) {
      throw FormatError("'" + path_ + "': truncated tile data");
    }
    for (int y = 0; y < tile_h_; ++y) {
      std::memcpy(cache_.data() + y * row_bytes + size_t{3} * tx * tile_w_,
                  tile.data() + size_t{3} * y * tile_w_, size_t{3} * tile_w_);
    }
  }
  cached_ty_ = ty;
}

void BigTiffReader::read_rows(int y0, int count, uint8_t* dst) {
  if (y0 < 0 || count < 0 || y0 + count > height_) throw UsageError("BigTIFF row range out of bounds");
  const int across = (width_ + tile_w_ - 1) / tile_w_;
  const size_t row_bytes = size_t{3} * across * tile_w_;
  for (int y = y0; y < y0 + count; ++y) {
    load_tile_row(y / tile_h_);
    std::memcpy(dst, cache_.data() + (y % tile_h_) * row_bytes, size_t{3} * width_);
    dst += size_t{3} * width_;
  }
}

BigTiffWriter::BigTiffWriter(const std::string& path, int width, int height, int tile)
    : path_(path), width_(width), height_(height), tile_(tile) {
  if (width < 1 || height < 1 || tile < 16 || tile % 16) {
    throw UsageError("BigTIFF size must be positive and the tile a multiple of 16");
  }
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw IoError("cannot create '" + path + "'");
  std::vector<uint8_t> header{'I', 'I'};
  put_u16(header, 43);
  put_u16(header, 8);
  put_u16(header, 0);
  put_u64(header, 0);
  if (std::fwrite(header.data(), 1, header.size(), file_) != header.size()) {
    throw IoError("failed writing '" + path + "'");
  }
  const int across = (width_ + tile_ - 1) / tile_;
  band_.assign(size_t{3} * across * tile_ * tile_, 0);
}

BigTiffWriter::~BigTiffWriter() {
  if (file_) std::fclose(file_);
}

void BigTiffWriter::write_rows(const uint8_t* rows, int count) {
  if (rows_written_ + count > height_) throw UsageError("BigTIFF writer received too many rows");
  const int across = (width_ + tile_ - 1) / tile_;
  const size_t band_row = size_t{3} * across * tile_;
  for (int r = 0; r < count; ++r) {
    std::memcpy(band_.data() + buffered_ * band_row, rows + size_t{3} * width_ * r, size_t{3} * width_);
    ++buffered_;
    ++rows_written_;
    if (buffered_ == tile_ || rows_written_ == height_) flush_tile_row();
  }
}

void BigTiffWriter::flush_tile_row() {
  const int across = (width_ + tile_ - 1) / tile_;
  const size_t band_row = size_t{3} * across * tile_;
  // Rows past the image bottom and columns past its right edge stay zero.
  std::fill(band_.begin() + static_cast<std::ptrdiff_t>(buffered_ * band_row), band_.end(), 0);
  std::vector<uint8_t> tile(size_t{3} * tile_ * tile_);
  for (int tx = 0; tx < across; ++tx) {
    for (int y = 0; y < tile_; ++y) {
      std::memcpy(tile.data() + size_t{3} * y * tile_, band_.data() + y * band_row + size_t{3} * tx * tile_,
                  size_t{3} * tile_);
    }
    offsets_.push_back(static_cast<uint64_t>(std::ftell(file_)));
    counts_.push_back(tile.size());
    if (std::fwrite(tile.data(), 1, tile.size(), file_) != tile.size()) {
      throw IoError("failed writing '" + path_ + "'");
    }
  }
  buffered_ = 0;
  std::fill(band_.begin(), band_.end(), 0);
}

void BigTiffWriter::finish() {
  if (!file_) return;
  if (rows_written_ != height_) {
    throw UsageError("BigTIFF writer finished after " + std::to_string(rows_written_) + " of " +
                     std::to_string(height_) + " rows");
  }
  // Out-of-line arrays first, then the directory.
  auto tell = [&] { return static_cast<uint64_t>(std::ftell(file_)); };
  auto write_block = [&](const std::vector<uint8_t>& b) {
    if (std::fwrite(b.data(), 1, b.size(), file_) != b.size()) throw IoError("failed writing '" + path_ + "'");
  };
  std::vector<uint8_t> arrays;
  const uint64_t offsets_at = tell();
  for (uint64_t v : offsets_) put_u64(arrays, v);
  const uint64_t counts_at = offsets_at + arrays.size();
  for (uint64_t v : counts_) put_u64(arrays, v);
  write_block(arrays);

  const uint64_t ifd_at = tell();
  std::vector<uint8_t> ifd;
  auto entry = [&](uint16_t tag, uint16_t type, uint64_t count, uint64_t value) {
    put_u16(ifd, tag);
    put_u16(ifd, type);
    put_u64(ifd, count);
    put_u64(ifd, value);
  };
  const bool single = offsets_.size() == 1;
  put_u64(ifd, 11);
  entry(kImageWidth, kLong, 1, static_cast<uint64_t>(width_));
  entry(kImageLength, kLong, 1, static_cast<uint64_t>(height_));
  entry(kBitsPerSample, kShort, 3, 0x0000000800080008ULL);
  entry(kCompression, kShort, 1, 1);
  entry(kPhotometric, kShort, 1, 2);
  entry(kSamplesPerPixel, kShort, 1, 3);
  entry(kPlanarConfig, kShort, 1, 1);
  entry(kTileWidth, kLong, 1, static_cast<uint64_t>(tile_));
  entry(kTileLength, kLong, 1, static_cast<uint64_t>(tile_));
  entry(kTileOffsets, kLong8, offsets_.size(), single ? offsets_[0] : offsets_at);
  entry(kTileByteCounts, kLong8, counts_.size(), single ? counts_[0] : counts_at);
  put_u64(ifd, 0);
  write_block(ifd);

  std::vector<uint8_t> ptr;
  put_u64(ptr, ifd_at);
  if (std::fseek(file_, 8, SEEK_SET) != 0) throw IoError("failed writing '" + path_ + "'");
  write_block(ptr);
  const int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) throw IoError("failed closing '" + path_ + "'");
}

}  // namespace focusfuse
