#pragma once

#include <string>
#include <vector>

#include "trisoup/core/config.hpp"
#include "trisoup/core/image.hpp"
#include "trisoup/geom/camera.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

struct Dataset {
  std::vector<Camera> cameras;
  std::vector<ImageD> images;
  SparseSeed seed;

  void validate() const;
};

/// Loads a COLMAP-style sparse reconstruction: cameras.txt, images.txt and
/// points3D.txt (searched in `path`, then `path`/sparse and `path`/sparse/0)
/// plus the image files from `path`/images. Supported camera models:
/// PINHOLE and SIMPLE_PINHOLE. Intrinsics and images are rescaled by
/// resolution_scale.
Dataset load_sfm(const std::string& path, double resolution_scale = 1.0);

/// Writes a dataset in the same text layout (used by the fixture generator).
void save_sfm(const std::string& dir, const Dataset& dataset);

}  // namespace trisoup
