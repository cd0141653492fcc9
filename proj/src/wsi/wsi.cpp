#include "wsi/wsi.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>

#include "common/error.hpp"
#include "image/png_io.hpp"
#include "wsi/bigtiff.hpp"

namespace focusfuse {
namespace {

class PngSource : public RowSource {
 public:
  explicit PngSource(const std::string& path) : reader_(path) {}
  int width() const override { return reader_.width(); }
  int height() const override { return reader_.height(); }
  void read_rows(int count, uint8_t* dst) override {
    for (int i = 0; i < count; ++i) reader_.read_row(dst + size_t{3} * width() * i);
  }

 private:
  PngRowReader reader_;
};

class TiffSource : public RowSource {
 public:
  explicit TiffSource(const std::string& path) : reader_(path) {}
  int width() const override { return reader_.width(); }
  int height() const override { return reader_.height(); }
  void read_rows(int count, uint8_t* dst) override {
    reader_.read_rows(next_, count, dst);
    next_ += count;
  }

 private:
  BigTiffReader reader_;
  int next_ = 0;
};

class PngSink : public RowSink {
 public:
  PngSink(const std::string& path, int w, int h) : writer_(path, w, h), width_(w) {}
  void write_rows(const uint8_t* rows, int count) override {
    for (int i = 0; i < count; ++i) writer_.write_row(rows + size_t{3} * width_ * i);
  }
  void finish() override { writer_.finish(); }

 private:
  PngRowWriter writer_;
  int width_;
};

class TiffSink : public RowSink {
 public:
  TiffSink(const std::string& path, int w, int h) : writer_(path, w, h) {}
  void write_rows(const uint8_t* rows, int count) override { writer_.write_rows(rows, count); }
  void finish() override { writer_.finish(); }

 private:
  BigTiffWriter writer_;
};

// Rolling window of input rows [top, top + rows) for one layer.
struct InputBand {
  std::unique_ptr<RowSource> src;
  int top = 0;
  int filled = 0;
  std::vector<uint8_t> rows;

  void advance_to(int new_top, int span) {
    const size_t row_bytes = size_t{3} * src->width();
    const int keep = std::max(0, top + filled - new_top);
    if (keep > 0 && new_top > top) {
      std::memmove(rows.data(), rows.data() + (new_top - top) * row_bytes, keep * row_bytes);
    }
    top = new_top;
    filled = keep;
    const int want = std::min(span, src->height() - top);
    if (want > filled) {
      src->read_rows(want - filled, rows.data() + filled * row_bytes);
      filled = want;
    }
  }
};

}  // namespace

std::unique_ptr<RowSource> open_row_source(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open '" + path + "'");
  if (is_bigtiff(path)) return std::make_unique<TiffSource>(path);
  return std::make_unique<PngSource>(path);
}

std::unique_ptr<RowSink> open_row_sink(const std::string& path, int width, int height) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".tif" || ext == ".tiff") return std::make_unique<TiffSink>(path, width, height);
  return std::make_unique<PngSink>(path, width, height);
}

Image read_big_image(const std::string& path) {
  auto src = open_row_source(path);
  const int w = src->width();
  const int h = src->height();
  std::vector<uint8_t> row(size_t{3} * w);
  Image img(3, h, w);
  for (int y = 0; y < h; ++y) {
    src->read_rows(1, row.data());
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_u8(row[size_t{3} * x + c]);
    }
  }
  return img;
}

void write_big_image(const std::string& path, const Image& img) {
  if (img.channels != 3) throw ShapeError("big images are RGB, got " + img.shape_str());
  auto sink = open_row_sink(path, img.width, img.height);
  std::vector<uint8_t> row(size_t{3} * img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) row[size_t{3} * x + c] = to_u8(img.at(c, y, x));
    }
    sink->write_rows(row.data(), 1);
  }
  sink->finish();
}

WsiSummary fuse_wsi(const std::vector<std::string>& inputs, const std::string& output,
                    const TileModel& model, int tile, int overlap) {
  if (inputs.empty()) throw UsageError("fuse_wsi needs at least one input");
  const auto start = std::chrono::steady_clock::now();
  std::vector<InputBand> bands;
  for (const auto& path : inputs) bands.push_back(InputBand{open_row_source(path), 0, 0, {}});
  const int w = bands.front().src->width();
  const int h = bands.front().src->height();
  for (size_t i = 1; i < bands.size(); ++i) {
    if (bands[i].src->width() != w || bands[i].src->height() != h) {
      throw ShapeError("input '" + inputs[i] + "' is " + std::to_string(bands[i].src->width()) + "x" +
                       std::to_string(bands[i].src->height()) + ", not aligned with '" + inputs[0] +
                       "' (" + std::to_string(w) + "x" + std::to_string(h) + ")");
    }
  }

  const TileGrid grid = plan_tiles(w, h, tile, overlap);
  const std::vector<float> profile = weight_profile(tile, overlap);
  const int span = std::min(tile, h);
  for (auto& b : bands) b.rows.resize(size_t{3} * w * span);

  WsiSummary summary;
  summary.width = w;
  summary.height = h;
  summary.tiles = grid.count();
  summary.tiles_x = static_cast<int>(grid.xs.size());
  summary.tiles_y = static_cast<int>(grid.ys.size());

  // Accumulator rows [acc_top, acc_top + span).
  std::vector<double> acc(size_t{3} * w * span, 0.0);
  std::vector<double> wsum(size_t{w} * span, 0.0);
  summary.accumulator_bytes = static_cast<int64_t>((acc.size() + wsum.size()) * sizeof(double));
  summary.input_band_bytes = static_cast<int64_t>(bands.size() * bands.front().rows.size());
  int acc_top = 0;
  auto sink = open_row_sink(output, w, h);
  std::vector<uint8_t> out_row(size_t{3} * w);

  auto emit = [&](int upto) {
    // Writes rows [acc_top, upto) and slides the accumulator down.
    const int n = upto - acc_top;
    for (int r = 0; r < n; ++r) {
      for (int x = 0; x < w; ++x) {
        const double ws = wsum[size_t{w} * r + x];
        for (int c = 0; c < 3; ++c) {
          const double v = acc[(size_t{3} * w) * r + size_t{3} * x + c] / ws;
          out_row[size_t{3} * x + c] = to_u8(static_cast<float>(v));
        }
      }
      sink->write_rows(out_row.data(), 1);
    }
    std::move(acc.begin() + static_cast<std::ptrdiff_t>(size_t{3} * w * n), acc.end(), acc.begin());
    std::fill(acc.end() - static_cast<std::ptrdiff_t>(size_t{3} * w * n), acc.end(), 0.0);
    std::move(wsum.begin() + static_cast<std::ptrdiff_t>(size_t{w} * n), wsum.end(), wsum.begin());
    std::fill(wsum.end() - static_cast<std::ptrdiff_t>(size_t{w} * n), wsum.end(), 0.0);
    acc_top = upto;
  };

  std::vector<Image> layer_tiles(bands.size(), Image(3, tile, tile));
  for (size_t ty = 0; ty < grid.ys.size(); ++ty) {
    const int y0 = grid.ys[ty];
    if (y0 > acc_top) emit(y0);
    for (auto& b : bands) b.advance_to(y0, span);
    for (int x0 : grid.xs) {
      for (size_t l = 0; l < bands.size(); ++l) {
        const InputBand& b = bands[l];
        Image& t = layer_tiles[l];
        for (int py = 0; py < tile; ++py) {
          const int sy = std::min(py, b.filled - 1);
          const uint8_t* row = b.rows.data() + size_t{3} * w * sy;
          for (int px = 0; px < tile; ++px) {
            const int sx = std::min(x0 + px, w - 1);
            for (int c = 0; c < 3; ++c) t.at(c, py, px) = from_u8(row[size_t{3} * sx + c]);
          }
        }
      }
      const Image out = model(layer_tiles);
      if (out.channels != 3 || out.height != tile || out.width != tile) {
        throw ShapeError("tile model returned " + out.shape_str() + ", expected [3, " +
                         std::to_string(tile) + ", " + std::to_string(tile) + "]");
      }
      for (int py = 0; py < tile && y0 + py < h; ++py) {
        const size_t r = static_cast<size_t>(y0 + py - acc_top);
        for (int px = 0; px < tile && x0 + px < w; ++px) {
          const double wt = double(profile[static_cast<size_t>(py)]) * profile[static_cast<size_t>(px)];
          const size_t x = static_cast<size_t>(x0 + px);
          wsum[size_t{w} * r + x] += wt;
          for (int c = 0; c < 3; ++c) acc[size_t{3} * w * r + 3 * x + c] += wt * out.at(c, py, px);
        }
      }
    }
  }
  emit(h);
  sink->finish();
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace focusfuse
