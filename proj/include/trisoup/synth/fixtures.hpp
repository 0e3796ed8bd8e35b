#pragma once

#include <cstdint>
#include <string>

#include "trisoup/io/colmap.hpp"

namespace trisoup {

/// Fits (mu, scale, rotation) so the canonical layout reproduces the given
/// vertices exactly. mu lands on the first isogonic point, the unique point
/// seeing the vertices along three directions 120 degrees apart; it exists
/// inside any triangle whose angles stay below 120 degrees.
struct FittedTriangle {
  Vec3 mu;
  Vec3 scale;
  Vec4 quat;  // (w,x,y,z)
};
FittedTriangle fit_triangle_params(const Vec3& v0, const Vec3& v1, const Vec3& v2);

/// A fully synthetic scene: posed views rendered from an exactly-known soup,
/// plus analytic depth maps of the underlying surfaces.
struct SyntheticScene {
  Dataset dataset;
  std::vector<ImageD> analytic_depths;
  TriangleSoup ground_truth;
  double scene_extent = 0.0;  // bounding-box diagonal of the visible surface
  double mean_depth = 0.0;    // mean valid analytic depth over all views
};

struct QuadSceneParams {
  int views = 20;
  int width = 128;
  int height = 128;
  int texture_grid = 24;  // ground-truth quad triangulation density per axis
  int seed_points = 400;
  std::uint64_t rng_seed = 12345;
  double half_size = 1.0;
  double camera_distance = 4.0;
  double camera_cone_deg = 22.0;
  double seed_noise = 0.004;
};

/// One textured quad in the z = 0 plane, cameras on a cap looking at it.
SyntheticScene make_quad_scene(const QuadSceneParams& params);

struct TwoPlaneSceneParams {
  int views = 14;
  int width = 96;
  int height = 96;
  int texture_grid = 14;
  int seed_points = 340;
  std::uint64_t rng_seed = 777;
  double back_half_size = 1.2;
  double front_half_size = 0.5;
  double front_offset = 0.8;  // distance in front of the back plane
  double camera_distance = 4.0;
  double camera_cone_deg = 24.0;
  double seed_noise = 0.004;
};

/// A large textured back plane partially occluded by a smaller front plane;
/// layered geometry with exact analytic depth.
SyntheticScene make_two_plane_scene(const TwoPlaneSceneParams& params);

/// Writes the scene as a loadable dataset: COLMAP-style text files, PPM
/// images, and PFM analytic depths under <dir>/depth_gt.
void save_fixture(const std::string& dir, const SyntheticScene& scene);

}  // namespace trisoup
