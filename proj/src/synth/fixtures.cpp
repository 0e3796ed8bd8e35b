#include "trisoup/synth/fixtures.hpp"

#include <cmath>
#include <filesystem>

#include "trisoup/core/error.hpp"
#include "trisoup/core/rng.hpp"
#include "trisoup/io/raster_io.hpp"
#include "trisoup/render/rasterizer.hpp"

namespace trisoup {

FittedTriangle fit_triangle_params(const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  const double a = (v2 - v1).norm();  // side opposite v0
  const double b = (v0 - v2).norm();
  const double c = (v1 - v0).norm();
  const double angle_a = std::acos(std::clamp(((v1 - v0).dot(v2 - v0)) / (b * c), -1.0, 1.0));
  const double angle_b = std::acos(std::clamp(((v0 - v1).dot(v2 - v1)) / (a * c), -1.0, 1.0));
  const double angle_c = M_PI - angle_a - angle_b;
  const double limit = 2.0 * M_PI / 3.0;
  if (angle_a >= limit || angle_b >= limit || angle_c >= limit) {
    throw ValidationError("fit_triangle_params: an angle reaches 120 degrees");
  }

  // first isogonic point from its trilinear coordinates csc(angle + 60 deg)
  const double ta = a / std::sin(angle_a + M_PI / 3.0);
  const double tb = b / std::sin(angle_b + M_PI / 3.0);
  const double tc = c / std::sin(angle_c + M_PI / 3.0);
  const Vec3 mu = (ta * v0 + tb * v1 + tc * v2) / (ta + tb + tc);

  FittedTriangle fit;
  fit.mu = mu;
  fit.scale = Vec3((v0 - mu).norm(), (v1 - mu).norm(), (v2 - mu).norm());

  const auto& u = canonical_offsets();
  const Vec3 a0 = (v0 - mu) / fit.scale[0];
  const Vec3 a1 = (v1 - mu) / fit.scale[1];
  Mat3 from, to;
  from.col(0) = u[0];
  from.col(1) = u[1];
  from.col(2) = u[0].cross(u[1]);
  to.col(0) = a0;
  to.col(1) = a1;
  to.col(2) = a0.cross(a1);
  const Mat3 rot = to * from.inverse();
  const Quat q(rot);
  fit.quat = Vec4(q.w(), q.x(), q.y(), q.z());

  const VertexLayout check = TriangleSoup::layout_from(mu, rot, fit.scale);
  const double err = (check.v[0] - v0).norm() + (check.v[1] - v1).norm() +
                     (check.v[2] - v2).norm();
  TRISOUP_CHECK(err < 1e-6 * std::max(1.0, a + b + c), "fit_triangle_params: refit failed");
  return fit;
}

namespace {

constexpr double kC0 = 0.28209479177387814;

Vec3 texture_rgb(double x, double y, double phase) {
  return Vec3(0.5 + 0.27 * std::sin(2.3 * x + 0.7 + phase) * std::cos(1.9 * y - 0.4),
              0.5 + 0.25 * std::sin(1.7 * x - 1.1 - phase) * std::sin(2.4 * y + 0.3),
              0.5 + 0.28 * std::cos(2.0 * x + 0.2) * std::sin(1.5 * y + 1.2 + phase));
}

struct QuadSpec {
  double half_x, half_y;
  double z;
  double phase;
};

/// Appends an exactly-parameterized triangulated quad to the soup builder.
struct SoupBuilder {
  std::vector<FittedTriangle> tris;
  std::vector<std::array<Vec3, 3>> colors;

  void add_quad(const QuadSpec& q, int grid) {
    const double step_x = 2.0 * q.half_x / grid;
    const double step_y = 2.0 * q.half_y / grid;
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        const double x0 = -q.half_x + gx * step_x;
        const double y0 = -q.half_y + gy * step_y;
        const Vec3 p00(x0, y0, q.z), p10(x0 + step_x, y0, q.z);
        const Vec3 p01(x0, y0 + step_y, q.z), p11(x0 + step_x, y0 + step_y, q.z);
        add_triangle(p00, p10, p11, q.phase);
        add_triangle(p00, p11, p01, q.phase);
      }
    }
  }

  void add_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double phase) {
    tris.push_back(fit_triangle_params(a, b, c));
    colors.push_back({texture_rgb(a[0], a[1], phase), texture_rgb(b[0], b[1], phase),
                      texture_rgb(c[0], c[1], phase)});
  }

  TriangleSoup build(double sigma) const {
    TriangleSoup soup(tris.size(), 0);
    for (std::size_t i = 0; i < tris.size(); ++i) {
      const FittedTriangle& f = tris[i];
      for (int k = 0; k < 3; ++k) {
        soup.mu.at(i)[k] = f.mu[k];
        soup.scale_raw.at(i)[k] = std::log(f.scale[k]);
      }
      for (int k = 0; k < 4; ++k) soup.quat.at(i)[k] = f.quat[k];
      soup.opacity_raw.at(i)[0] = 14.0;  // effectively opaque
      soup.sigma_raw.at(i)[0] = std::log(sigma);
      for (int v = 0; v < 3; ++v) {
        double* block = soup.sh.at(i) + v * 3;
        for (int c = 0; c < 3; ++c) block[c] = (colors[i][v][c] - 0.5) / kC0;
      }
    }
    return soup;
  }
};

std::vector<Camera> cap_cameras(int views, int width, int height, double distance,
                                double cone_deg, double focal) {
  std::vector<Camera> cams;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < views; ++k) {
    // sunflower spread over the cap, first camera on the axis
    const double frac = views > 1 ? static_cast<double>(k) / (views - 1) : 0.0;
    const double theta = cone_deg * M_PI / 180.0 * std::sqrt(frac);
    const double phi = k * golden;
    const Vec3 eye = distance * Vec3(std::sin(theta) * std::cos(phi),
                                     std::sin(theta) * std::sin(phi), -std::cos(theta));
    Camera cam = make_lookat_camera(eye, Vec3(0, 0, 0), Vec3(0, -1, 0), width, height, focal);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%04d.ppm", k);
    cam.name = name;
    cams.push_back(cam);
  }
  return cams;
}

/// Depth of the nearest rectangle hit along each pixel ray; 0 off-surface.
ImageD analytic_quad_depth(const Camera& cam, const std::vector<QuadSpec>& quads) {
  ImageD depth(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Ray ray = cam.pixel_ray(x, y);
      double best = 0.0;
      for (const QuadSpec& q : quads) {
        if (std::abs(ray.dir[2]) < 1e-12) continue;
        const double d = (q.z - ray.origin[2]) / ray.dir[2];
        if (d <= 0.0) continue;
        const Vec3 p = ray.origin + d * ray.dir;
        if (std::abs(p[0]) > q.half_x || std::abs(p[1]) > q.half_y) continue;
        if (best == 0.0 || d < best) best = d;
      }
      depth.at(x, y, 0) = best;
    }
  }
  return depth;
}

SparseSeed sample_seed(const std::vector<QuadSpec>& quads, int count, double noise,
                       std::uint64_t rng_seed) {
  SparseSeed seed;
  Rng rng(rng_seed);
  double total_area = 0.0;
  for (const QuadSpec& q : quads) total_area += q.half_x * q.half_y;
  for (const QuadSpec& q : quads) {
    const int n = std::max(4, static_cast<int>(count * (q.half_x * q.half_y) / total_area));
    for (int k = 0; k < n; ++k) {
      const double x = rng.uniform(-0.97 * q.half_x, 0.97 * q.half_x);
      const double y = rng.uniform(-0.97 * q.half_y, 0.97 * q.half_y);
      Vec3 p(x, y, q.z);
      p += noise * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      seed.points.push_back(p);
      seed.colors.push_back(texture_rgb(x, y, q.phase));
    }
  }
  return seed;
}

SyntheticScene assemble_scene(const std::vector<QuadSpec>& quads,
                              const std::vector<Camera>& cams, int texture_grid,
                              int seed_points, double seed_noise, std::uint64_t rng_seed) {
  SoupBuilder builder;
  for (const QuadSpec& q : quads) builder.add_quad(q, texture_grid);

  SyntheticScene scene;
  // sharp edges: the diffuse falloff spans a small fraction of a grid cell
  const double cell = 2.0 * quads[0].half_x / texture_grid;
  scene.ground_truth = builder.build(4.0 / (0.02 * cell));

  RenderOptions opt;
  opt.depth_mode = DepthMode::kMedian;
  opt.active_sh_degree = 0;

  Vec3 lo(1e300, 1e300, 1e300), hi(-1e300, -1e300, -1e300);
  double depth_sum = 0.0;
  std::size_t depth_count = 0;
  for (const Camera& cam : cams) {
    const RenderOutput out = render(scene.ground_truth, cam, opt);
    scene.dataset.cameras.push_back(cam);
    scene.dataset.images.push_back(out.color);
    ImageD depth = analytic_quad_depth(cam, quads);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const double d = depth.at(x, y, 0);
        if (d <= 0.0) continue;
        depth_sum += d;
        ++depth_count;
        const Vec3 p = cam.unproject(x + 0.5, y + 0.5, d);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
    scene.analytic_depths.push_back(std::move(depth));
  }
  scene.mean_depth = depth_count > 0 ? depth_sum / depth_count : 0.0;
  scene.scene_extent = (hi - lo).norm();
  scene.dataset.seed = sample_seed(quads, seed_points, seed_noise, rng_seed);
  scene.dataset.validate();
  return scene;
}

}  // namespace

SyntheticScene make_quad_scene(const QuadSceneParams& p) {
  const std::vector<QuadSpec> quads = {{p.half_size, p.half_size, 0.0, 0.0}};
  const std::vector<Camera> cams =
      cap_cameras(p.views, p.width, p.height, p.camera_distance, p.camera_cone_deg,
                  1.7 * p.width);
  return assemble_scene(quads, cams, p.texture_grid, p.seed_points, p.seed_noise,
                        p.rng_seed);
}

SyntheticScene make_two_plane_scene(const TwoPlaneSceneParams& p) {
  const std::vector<QuadSpec> quads = {
      {p.back_half_size, p.back_half_size, 0.0, 0.0},
      {p.front_half_size, p.front_half_size, -p.front_offset, 1.9},
  };
  const std::vector<Camera> cams =
      cap_cameras(p.views, p.width, p.height, p.camera_distance, p.camera_cone_deg,
                  1.45 * p.width);
  return assemble_scene(quads, cams, p.texture_grid, p.seed_points, p.seed_noise,
                        p.rng_seed);
}

void save_fixture(const std::string& dir, const SyntheticScene& scene) {
  save_sfm(dir, scene.dataset);
  std::filesystem::create_directories(dir + "/depth_gt");
  for (std::size_t i = 0; i < scene.analytic_depths.size(); ++i) {
    std::string name = scene.dataset.cameras[i].name;
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    write_pfm(dir + "/depth_gt/" + name + ".pfm", scene.analytic_depths[i]);
  }
}

}  // namespace trisoup
