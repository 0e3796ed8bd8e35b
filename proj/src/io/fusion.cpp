#include "trisoup/io/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trisoup/core/error.hpp"
#include "trisoup/core/parallel.hpp"

namespace trisoup {

FusedCloud fuse_depth_maps(const std::vector<ImageD>& depths,
                           const std::vector<ImageD>& colors,
                           const std::vector<Camera>& cams, const FusionParams& params) {
  const std::size_t n_views = depths.size();
  TRISOUP_CHECK(cams.size() == n_views, "fuse_depth_maps: camera count mismatch");
  TRISOUP_CHECK(colors.empty() || colors.size() == n_views,
                "fuse_depth_maps: color count mismatch");

  // neighbor lists per reference view
  std::vector<std::vector<int>> neighbors(n_views);
  for (std::size_t r = 0; r < n_views; ++r) {
    std::vector<int> others;
    for (std::size_t v = 0; v < n_views; ++v) {
      if (v != r) others.push_back(static_cast<int>(v));
    }
    if (params.neighbor_limit > 0 &&
        static_cast<int>(others.size()) > params.neighbor_limit) {
      const Vec3 c_r = cams[r].center();
      std::sort(others.begin(), others.end(), [&](int a, int b) {
        const double da = (cams[a].center() - c_r).squaredNorm();
        const double db = (cams[b].center() - c_r).squaredNorm();
        if (da != db) return da < db;
        return a < b;
      });
      others.resize(params.neighbor_limit);
    }
    neighbors[r] = std::move(others);
  }

  struct ViewResult {
    std::vector<Vec3> points;
    std::vector<Vec3> colors;
    std::vector<std::int32_t> consistency;
  };
  std::vector<ViewResult> per_view(n_views);

  parallel_for(static_cast<int>(n_views), [&](int r) {
    const Camera& cam_r = cams[r];
    const ImageD& depth_r = depths[r];
    ViewResult& res = per_view[r];
    for (int y = 0; y < cam_r.height; ++y) {
      for (int x = 0; x < cam_r.width; ++x) {
        const double d = depth_r.at(x, y, 0);
        if (d <= 0.0) continue;
        const Vec3 point = cam_r.unproject(x + 0.5, y + 0.5, d);

        int agreeing = 0;
        for (const int v : neighbors[r]) {
          const Camera& cam_v = cams[v];
          Vec2 uv;
          if (!cam_v.project(point, &uv)) continue;
          const int px = static_cast<int>(std::floor(uv[0]));
          const int py = static_cast<int>(std::floor(uv[1]));
          if (px < 0 || px >= cam_v.width || py < 0 || py >= cam_v.height) continue;
          const double d_v = depths[v].at(px, py, 0);
          if (d_v <= 0.0) continue;

          if (params.depth_rel_thresh > 0.0) {
            const double d_expected = (point - cam_v.center()).norm();
            if (std::abs(d_expected - d_v) / d_v > params.depth_rel_thresh) continue;
          }

          // reproject the neighbor's estimate back into the reference view
          const Vec3 point_v = cam_v.unproject(px + 0.5, py + 0.5, d_v);
          Vec2 uv_back;
          if (!cam_r.project(point_v, &uv_back)) continue;
          const double err =
              std::hypot(uv_back[0] - (x + 0.5), uv_back[1] - (y + 0.5));
          if (err <= params.px_thresh) ++agreeing;
        }

        if (agreeing >= params.min_views) {
          res.points.push_back(point);
          if (!colors.empty()) {
            res.colors.emplace_back(colors[r].at(x, y, 0), colors[r].at(x, y, 1),
                                    colors[r].at(x, y, 2));
          }
          res.consistency.push_back(agreeing);
        }
      }
    }
  });

  FusedCloud cloud;
  for (std::size_t r = 0; r < n_views; ++r) {
    const ViewResult& res = per_view[r];
    cloud.points.insert(cloud.points.end(), res.points.begin(), res.points.end());
    cloud.colors.insert(cloud.colors.end(), res.colors.begin(), res.colors.end());
    cloud.consistency.insert(cloud.consistency.end(), res.consistency.begin(),
                             res.consistency.end());
    cloud.source_view.insert(cloud.source_view.end(), res.points.size(),
                             static_cast<std::int32_t>(r));
  }
  return cloud;
}

}  // namespace trisoup
