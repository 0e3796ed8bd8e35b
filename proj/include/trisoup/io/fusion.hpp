#pragma once

#include <cstdint>
#include <vector>

#include "trisoup/core/image.hpp"
#include "trisoup/geom/camera.hpp"

namespace trisoup {

struct FusedCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
  std::vector<std::int32_t> source_view;
  std::vector<std::int32_t> consistency;  // neighbor views that agreed
};

struct FusionParams {
  double px_thresh = 1.0;
  int min_views = 3;
  double depth_rel_thresh = 0.0;  // 0 disables the relative-depth check
  int neighbor_limit = 0;         // 0 = all other views, else k nearest by center
};

/// Reprojection-filtered depth-map fusion. Each valid reference pixel is
/// unprojected, looked up in every neighbor view (nearest-neighbor depth
/// fetch), projected back, and kept when the round-trip pixel error stays
/// within px_thresh for at least min_views neighbors.
FusedCloud fuse_depth_maps(const std::vector<ImageD>& depths,
                           const std::vector<ImageD>& colors,
                           const std::vector<Camera>& cams, const FusionParams& params);

}  // namespace trisoup
