#pragma once

#include <cstdint>
#include <vector>

#include "trisoup/core/config.hpp"
#include "trisoup/core/image.hpp"
#include "trisoup/geom/camera.hpp"
#include "trisoup/geom/kernels.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

enum class DepthMode { kMedian, kMean };

struct RenderOptions {
  DepthMode depth_mode = DepthMode::kMedian;
  double near_plane = 0.01;
  double transmittance_min = 1e-4;
  bool transmittance_uses_diffuse = true;
  Vec3 background = Vec3::Zero();
  int tile_size = 16;
  bool deterministic = true;
  bool per_vertex_view_dirs = false;
  bool camera_facing_normals = true;
  int active_sh_degree = 3;
};

RenderOptions make_render_options(const TrainConfig& cfg, int active_sh_degree);

/// Per-camera cache of everything a triangle needs during one render.
struct TriRenderData {
  bool active = false;
  VertexLayout lay;
  double alpha = 0.0;
  double sigma = 0.0;
  std::array<Vec3, 3> view_dir;
  std::array<ShColor, 3> color;
};

/// One blended contribution, stored in front-to-back order.
struct PixelContrib {
  std::int32_t tri = -1;
  double depth = 0.0;
  Vec3 lambda = Vec3::Zero();
  double edge_dist = 0.0;
  double w_sigma = 0.0;
  std::int8_t nearest_edge = -1;
  std::int8_t corner_vertex = -1;
};

struct TileBinning {
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::int32_t>> tiles;
  std::vector<double> screen_extent;  // per triangle, pixels; 0 when culled

  int tile_count() const { return tiles_x * tiles_y; }
};

/// Conservative screen-space binning: each triangle lands in every tile where
/// its diffuse band (w_sigma >= 1/255) could touch a pixel center.
TileBinning tile_bin(const TriangleSoup& soup, const Camera& cam, const RenderOptions& opt);

struct RenderOutput {
  int width = 0;
  int height = 0;
  DepthMode mode = DepthMode::kMedian;
  ImageD color;          // H x W x 3, background composited
  ImageD depth;          // H x W x 1, 0 where undefined
  ImageD normal;         // H x W x 3, alpha-blended, not renormalized
  ImageD transmittance;  // H x W x 1, final T

  // per-pixel contributor records for the backward pass
  std::vector<std::uint32_t> contrib_start;  // H*W, offsets into contribs
  std::vector<std::uint32_t> contrib_count;  // H*W
  std::vector<PixelContrib> contribs;
  std::vector<std::int32_t> median_index;    // H*W, index into the pixel span, -1 if none
  std::vector<double> weight_sum;            // H*W, sum of blend weights

  TileBinning binning;
  std::vector<TriRenderData> tri_data;

  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

RenderOutput render(const TriangleSoup& soup, const Camera& cam, const RenderOptions& opt);

/// Accumulates dL/d{mu, sh, scale_raw, quat, opacity_raw, sigma_raw} into the
/// soup gradient buffers from per-pixel image gradients. Shapes must match the
/// forward output.
void render_backward(TriangleSoup& soup, const Camera& cam, const RenderOptions& opt,
                     const RenderOutput& out, const ImageD& grad_color,
                     const ImageD& grad_depth, const ImageD& grad_normal);

}  // namespace trisoup
