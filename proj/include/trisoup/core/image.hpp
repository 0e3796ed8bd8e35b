#pragma once

#include <cstdint>
#include <vector>

#include "trisoup/core/error.hpp"

namespace trisoup {

/// Row-major interleaved raster. Channel count is dynamic (1 or 3 in practice).
template <typename T>
struct ImageT {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  ImageT() = default;
  ImageT(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  bool same_shape(const ImageT& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

using ImageD = ImageT<double>;
using ImageU8 = ImageT<std::uint8_t>;

inline void require_same_shape(const ImageD& a, const ImageD& b, const char* what) {
  if (!a.same_shape(b)) throw ContractError(std::string(what) + ": image shape mismatch");
}

/// Mean of channels; used wherever a scalar intensity is needed.
inline ImageD to_grayscale(const ImageD& img) {
  ImageD out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels; ++c) s += img.at(x, y, c);
      out.at(x, y, 0) = s / img.channels;
    }
  return out;
}

/// Bilinear resize. Treats pixel centers at (i+0.5, j+0.5).
ImageD resize_bilinear(const ImageD& img, int new_w, int new_h);

}  // namespace trisoup
