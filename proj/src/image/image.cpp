#include "image/image.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace focusfuse {

std::string Image::shape_str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

uint8_t to_u8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

Image crop(const Image& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width || y + h > img.height) {
    throw ShapeError("crop window " + std::to_string(w) + "x" + std::to_string(h) + " at (" +
                     std::to_string(x) + "," + std::to_string(y) + ") outside image " +
                     img.shape_str());
  }
  Image out(img.channels, h, w);
  for (int c = 0; c < img.channels; ++c) {
    for (int r = 0; r < h; ++r) {
      const float* src = img.channel(c) + int64_t{y + r} * img.width + x;
      std::copy(src, src + w, out.channel(c) + int64_t{r} * w);
    }
  }
  return out;
}

Image pad_replicate(const Image& img, int w, int h) {
  if (w < img.width || h < img.height) throw ShapeError("pad_replicate cannot shrink an image");
  Image out(img.channels, h, w);
  for (int c = 0; c < img.channels; ++c) {
    for (int r = 0; r < h; ++r) {
      const float* src = img.channel(c) + int64_t{std::min(r, img.height - 1)} * img.width;
      float* dst = out.channel(c) + int64_t{r} * w;
      std::copy(src, src + img.width, dst);
      std::fill(dst + img.width, dst + w, src[img.width - 1]);
    }
  }
  return out;
}

Image quantize_u8(const Image& img) {
  Image out = img;
  for (float& v : out.data) v = from_u8(to_u8(v));
  return out;
}

}  // namespace focusfuse
