#include "image/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>

#include "common/error.hpp"

namespace focusfuse {
namespace {

// libpng reports errors by longjmp. Every call into libpng below happens
// inside a function whose only automatic objects across setjmp are plain
// pointers, and the C++ exception is thrown after the jump lands.
struct ErrorSink {
  char message[256] = {0};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::strncpy(sink->message, msg, sizeof(sink->message) - 1);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct ReadHandle {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ErrorSink sink;
  std::string path;

  ~ReadHandle() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct WriteHandle {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ErrorSink sink;
  std::string path;

  ~WriteHandle() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

[[noreturn]] void fail(const std::string& path, const char* what) {
  throw IoError("PNG '" + path + "': " + what);
}

void open_read(ReadHandle& h, const std::string& path) {
  h.path = path;
  h.fp = std::fopen(path.c_str(), "rb");
  if (!h.fp) fail(path, "cannot open for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, h.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("'" + path + "' is not a PNG file");
  }
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &h.sink, on_error, on_warning);
  if (!h.png) fail(path, "out of memory");
  h.info = png_create_info_struct(h.png);
  if (!h.info) fail(path, "out of memory");
}

// Reads the header and installs transforms producing 8-bit gray or RGB.
// Returns false on a libpng error (message in h.sink).
bool read_header(ReadHandle* h, int* channels) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_init_io(h->png, h->fp);
  png_set_sig_bytes(h->png, 8);
  png_read_info(h->png, h->info);
  const png_byte color = png_get_color_type(h->png, h->info);
  const png_byte depth = png_get_bit_depth(h->png, h->info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h->png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(h->png);
  if (depth == 16) png_set_strip_16(h->png);
  png_set_strip_alpha(h->png);
  if (png_get_valid(h->png, h->info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(h->png);
  png_set_interlace_handling(h->png);
  png_read_update_info(h->png, h->info);
  *channels = png_get_channels(h->png, h->info);
  return true;
}

bool read_rows(ReadHandle* h, png_bytepp rows) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_read_image(h->png, rows);
  png_read_end(h->png, nullptr);
  return true;
}

bool read_one_row(ReadHandle* h, png_bytep row) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_read_row(h->png, row, nullptr);
  return true;
}

void open_write(WriteHandle& h, const std::string& path) {
  h.path = path;
  h.fp = std::fopen(path.c_str(), "wb");
  if (!h.fp) fail(path, "cannot open for writing");
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &h.sink, on_error, on_warning);
  if (!h.png) fail(path, "out of memory");
  h.info = png_create_info_struct(h.png);
  if (!h.info) fail(path, "out of memory");
}

bool write_header(WriteHandle* h, int width, int height, int channels) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_init_io(h->png, h->fp);
  png_set_IHDR(h->png, h->info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h->png, h->info);
  return true;
}

bool write_one_row(WriteHandle* h, png_bytep row) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_write_row(h->png, row);
  return true;
}

bool write_end(WriteHandle* h) {
  if (setjmp(png_jmpbuf(h->png))) return false;
  png_write_end(h->png, nullptr);
  return true;
}

}  // namespace

Image read_png(const std::string& path, int channels) {
  ReadHandle h;
  open_read(h, path);
  int file_channels = 0;
  if (!read_header(&h, &file_channels)) fail(path, h.sink.message);
  const int width = static_cast<int>(png_get_image_width(h.png, h.info));
  const int height = static_cast<int>(png_get_image_height(h.png, h.info));
  const size_t stride = png_get_rowbytes(h.png, h.info);

  std::vector<uint8_t> pixels(stride * static_cast<size_t>(height));
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<size_t>(y)] = pixels.data() + stride * y;
  if (!read_rows(&h, rows.data())) fail(path, h.sink.message);

  const int out_c = channels == 0 ? file_channels : channels;
  if (out_c != 1 && out_c != 3) throw UsageError("read_png: channels must be 0, 1 or 3");
  Image img(out_c, height, width);
  for (int y = 0; y < height; ++y) {
    const uint8_t* row = rows[static_cast<size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const uint8_t* px = row + x * file_channels;
      if (out_c == file_channels) {
        for (int c = 0; c < out_c; ++c) img.at(c, y, x) = from_u8(px[c]);
      } else if (out_c == 3) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_u8(px[0]);
      } else {
        // Rec. 601 luma, rounded back to 8 bits.
        const double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        img.at(0, y, x) = from_u8(static_cast<uint8_t>(std::lround(luma)));
      }
    }
  }
  return img;
}

PngInfo png_info(const std::string& path) {
  ReadHandle h;
  open_read(h, path);
  int channels = 0;
  if (!read_header(&h, &channels)) fail(path, h.sink.message);
  return PngInfo{static_cast<int>(png_get_image_width(h.png, h.info)),
                 static_cast<int>(png_get_image_height(h.png, h.info)), channels};
}

void write_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw UsageError("write_png supports 1 or 3 channels, got " + img.shape_str());
  }
  WriteHandle h;
  open_write(h, path);
  if (!write_header(&h, img.width, img.height, img.channels)) fail(path, h.sink.message);
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row[static_cast<size_t>(x * img.channels + c)] = to_u8(img.at(c, y, x));
      }
    }
    if (!write_one_row(&h, row.data())) fail(path, h.sink.message);
  }
  if (!write_end(&h)) fail(path, h.sink.message);
  if (std::fflush(h.fp) != 0) fail(path, "write failed");
}

// ---------------------------------------------------------------------------

struct PngRowReader::State {
  ReadHandle h;
  int channels = 0;
  std::vector<uint8_t> scratch;
};

PngRowReader::PngRowReader(const std::string& path) : state_(std::make_unique<State>()) {
  open_read(state_->h, path);
  if (!read_header(&state_->h, &state_->channels)) fail(path, state_->h.sink.message);
  if (png_get_interlace_type(state_->h.png, state_->h.info) != PNG_INTERLACE_NONE) {
    throw FormatError("'" + path + "': interlaced PNGs cannot be streamed");
  }
  width_ = static_cast<int>(png_get_image_width(state_->h.png, state_->h.info));
  height_ = static_cast<int>(png_get_image_height(state_->h.png, state_->h.info));
  state_->scratch.resize(static_cast<size_t>(width_) * state_->channels);
}

PngRowReader::~PngRowReader() = default;

void PngRowReader::read_row(uint8_t* row) {
  if (!read_one_row(&state_->h, state_->scratch.data())) {
    fail(state_->h.path, state_->h.sink.message);
  }
  const int c = state_->channels;
  for (int x = 0; x < width_; ++x) {
    for (int k = 0; k < 3; ++k) row[x * 3 + k] = state_->scratch[static_cast<size_t>(x * c + (c == 3 ? k : 0))];
  }
}

struct PngRowWriter::State {
  WriteHandle h;
};

PngRowWriter::PngRowWriter(const std::string& path, int width, int height)
    : state_(std::make_unique<State>()), height_(height) {
  open_write(state_->h, path);
  if (!write_header(&state_->h, width, height, 3)) fail(path, state_->h.sink.message);
}

PngRowWriter::~PngRowWriter() = default;

void PngRowWriter::write_row(const uint8_t* row) {
  if (rows_written_ >= height_) throw UsageError("PngRowWriter: too many rows");
  if (!write_one_row(&state_->h, const_cast<png_bytep>(row))) {
    fail(state_->h.path, state_->h.sink.message);
  }
  ++rows_written_;
}

void PngRowWriter::finish() {
  if (rows_written_ != height_) {
    throw UsageError("PngRowWriter: " + std::to_string(rows_written_) + " of " +
                     std::to_string(height_) + " rows written");
  }
  if (!write_end(&state_->h)) fail(state_->h.path, state_->h.sink.message);
  if (std::fflush(state_->h.fp) != 0) fail(state_->h.path, "write failed");
}

}  // namespace focusfuse
