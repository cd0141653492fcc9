#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace focusfuse {

// Planar float image, channel-major (c, y, x). Pixel values are in [0, 1]
// unless stated otherwise.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

  int64_t plane() const { return int64_t{height} * width; }
  bool empty() const { return data.empty(); }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  std::string shape_str() const;

  float& at(int c, int y, int x) { return data[static_cast<size_t>((c * int64_t{height} + y) * width + x)]; }
  float at(int c, int y, int x) const {
    return data[static_cast<size_t>((c * int64_t{height} + y) * width + x)];
  }
  float* channel(int c) { return data.data() + c * plane(); }
  const float* channel(int c) const { return data.data() + c * plane(); }
};

// round(clamp(v, 0, 1) * 255)
uint8_t to_u8(float v);
inline float from_u8(uint8_t v) { return static_cast<float>(v) / 255.0f; }

// Crop [x, x+w) x [y, y+h); the window must lie inside the image.
Image crop(const Image& img, int x, int y, int w, int h);
// Pads to (w, h) by replicating the last row/column.
Image pad_replicate(const Image& img, int w, int h);

// Rounds every value through 8 bits, as writing and re-reading a PNG would.
Image quantize_u8(const Image& img);

}  // namespace focusfuse
