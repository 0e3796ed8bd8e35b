#include "trisoup/core/image.hpp"

#include <algorithm>
#include <cmath>

namespace trisoup {

ImageD resize_bilinear(const ImageD& img, int new_w, int new_h) {
  if (new_w == img.width && new_h == img.height) return img;
  ImageD out(new_w, new_h, img.channels);
  const double sx = static_cast<double>(img.width) / new_w;
  const double sy = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < new_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
        const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
        out.at(x, y, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

}  // namespace trisoup
