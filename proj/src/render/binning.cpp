#include <algorithm>
#include <cmath>

#include "trisoup/render/rasterizer.hpp"

namespace trisoup {

RenderOptions make_render_options(const TrainConfig& cfg, int active_sh_degree) {
  RenderOptions opt;
  opt.depth_mode = cfg.depth_mode == "mean" ? DepthMode::kMean : DepthMode::kMedian;
  opt.near_plane = cfg.near_plane;
  opt.transmittance_min = cfg.transmittance_min;
  opt.transmittance_uses_diffuse = cfg.transmittance_uses_diffuse;
  opt.background = Vec3(cfg.bg_r, cfg.bg_g, cfg.bg_b);
  opt.tile_size = cfg.tile_size;
  opt.deterministic = cfg.deterministic;
  opt.per_vertex_view_dirs = cfg.per_vertex_view_dirs;
  opt.camera_facing_normals = cfg.camera_facing_normals;
  opt.active_sh_degree = std::min(active_sh_degree, cfg.sh_degree);
  return opt;
}

namespace {

// Contributions need alpha_eff = alpha * w_sigma >= 1/255, i.e.
// w_sigma >= 1/(255 alpha): the diffuse band can extend at most
// ln(255 alpha - 1) / sigma outside the triangle. Returns a negative value
// when the triangle can never contribute at all.
double diffuse_margin(double sigma, double alpha) {
  const double arg = 255.0 * alpha - 1.0;
  if (arg <= 0.0) return -1.0;
  return std::max(0.0, std::log(arg)) / sigma;
}

}  // namespace

TileBinning tile_bin(const TriangleSoup& soup, const Camera& cam, const RenderOptions& opt) {
  TileBinning bin;
  bin.tile_size = opt.tile_size;
  bin.tiles_x = (cam.width + opt.tile_size - 1) / opt.tile_size;
  bin.tiles_y = (cam.height + opt.tile_size - 1) / opt.tile_size;
  bin.tiles.assign(static_cast<std::size_t>(bin.tile_count()), {});
  bin.screen_extent.assign(soup.count(), 0.0);

  const double focal = std::max(cam.fx, cam.fy);
  for (std::size_t i = 0; i < soup.count(); ++i) {
    const ActivatedTriangle act = soup.activate(i);
    const VertexLayout lay = TriangleSoup::layout_from(
        Vec3(soup.mu.at(i)[0], soup.mu.at(i)[1], soup.mu.at(i)[2]), act.rot, act.scale);
    if (lay.degenerate) continue;

    const double margin = diffuse_margin(act.sigma, act.alpha);
    if (margin < 0.0) continue;  // opacity too low to ever contribute

    Vec3 cam_v[3];
    double z_min = 1e300, z_max = -1e300;
    for (int j = 0; j < 3; ++j) {
      cam_v[j] = cam.rot * lay.v[j] + cam.trans;
      z_min = std::min(z_min, cam_v[j][2]);
      z_max = std::max(z_max, cam_v[j][2]);
    }
    if (z_max + margin <= opt.near_plane) continue;  // entirely behind the near plane

    int tx0, tx1, ty0, ty1;
    double extent = 0.0;
    if (z_min - margin <= opt.near_plane) {
      // straddles the near plane; perspective bounds blow up, take every tile
      tx0 = 0;
      ty0 = 0;
      tx1 = bin.tiles_x - 1;
      ty1 = bin.tiles_y - 1;
      extent = std::hypot(cam.width, cam.height);
    } else {
      // the diffuse band lies in the Minkowski sum with a ball of the margin
      // radius; bound it by the projected corners of per-vertex cubes
      double u_min = 1e300, u_max = -1e300, v_min = 1e300, v_max = -1e300;
      for (int j = 0; j < 3; ++j) {
        for (int corner = 0; corner < 8; ++corner) {
          const Vec3 p(cam_v[j][0] + ((corner & 1) ? margin : -margin),
                       cam_v[j][1] + ((corner & 2) ? margin : -margin),
                       cam_v[j][2] + ((corner & 4) ? margin : -margin));
          const double u = cam.fx * p[0] / p[2] + cam.cx;
          const double v = cam.fy * p[1] / p[2] + cam.cy;
          u_min = std::min(u_min, u);
          u_max = std::max(u_max, u);
          v_min = std::min(v_min, v);
          v_max = std::max(v_max, v);
        }
      }
      if (u_max < 0.0 || u_min > cam.width || v_max < 0.0 || v_min > cam.height) {
        continue;  // off screen
      }
      // pixels are sampled at centers (i + 0.5)
      const int px0 = std::max(0, static_cast<int>(std::floor(u_min - 0.5)) - 1);
      const int px1 = std::min(cam.width - 1, static_cast<int>(std::ceil(u_max - 0.5)) + 1);
      const int py0 = std::max(0, static_cast<int>(std::floor(v_min - 0.5)) - 1);
      const int py1 = std::min(cam.height - 1, static_cast<int>(std::ceil(v_max - 0.5)) + 1);
      if (px0 > px1 || py0 > py1) continue;
      tx0 = px0 / opt.tile_size;
      tx1 = px1 / opt.tile_size;
      ty0 = py0 / opt.tile_size;
      ty1 = py1 / opt.tile_size;
      extent = std::max(u_max - u_min, v_max - v_min);
      (void)focal;
    }

    bin.screen_extent[i] = extent;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        bin.tiles[static_cast<std::size_t>(ty) * bin.tiles_x + tx].push_back(
            static_cast<std::int32_t>(i));
      }
    }
  }
  return bin;
}

}  // namespace trisoup
