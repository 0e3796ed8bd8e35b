#pragma once

#include <string>

#include "trisoup/core/types.hpp"

namespace trisoup {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
};

/// Pinhole camera with a world-to-camera rigid pose (X_cam = R X_world + t).
/// Pixel (i,j) covers [i,i+1) x [j,j+1); its center is (i+0.5, j+0.5).
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rot = Mat3::Identity();
  Vec3 trans = Vec3::Zero();
  std::string name;

  Vec3 center() const { return -(rot.transpose() * trans); }
  Vec3 forward() const { return rot.row(2).transpose(); }  // world-space optical axis

  /// Ray through continuous pixel coordinates (u,v).
  Ray ray_through(double u, double v) const {
    const Vec3 dir_cam((u - cx) / fx, (v - cy) / fy, 1.0);
    const Vec3 dir_world = rot.transpose() * dir_cam;
    return {center(), dir_world.normalized()};
  }
  Ray pixel_ray(int i, int j) const { return ray_through(i + 0.5, j + 0.5); }

  /// Projects a world point. Returns false when behind the camera (z <= 0).
  bool project(const Vec3& x_world, Vec2* uv, double* z_cam = nullptr) const {
    const Vec3 xc = rot * x_world + trans;
    if (z_cam) *z_cam = xc[2];
    if (xc[2] <= 0.0) return false;
    (*uv)[0] = fx * xc[0] / xc[2] + cx;
    (*uv)[1] = fy * xc[1] / xc[2] + cy;
    return true;
  }

  /// Point at Euclidean distance d along the ray through (u,v).
  Vec3 unproject(double u, double v, double d) const {
    const Ray r = ray_through(u, v);
    return r.origin + d * r.dir;
  }

  Camera scaled(double factor) const {
    Camera out = *this;
    out.width = std::max(1, static_cast<int>(std::lround(width * factor)));
    out.height = std::max(1, static_cast<int>(std::lround(height * factor)));
    const double sx = static_cast<double>(out.width) / width;
    const double sy = static_cast<double>(out.height) / height;
    out.fx = fx * sx;
    out.fy = fy * sy;
    out.cx = cx * sx;
    out.cy = cy * sy;
    return out;
  }

  void validate() const;
};

/// Camera looking at `target` from `eye`; `up` resolves the roll.
Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width,
                          int height, double focal);

}  // namespace trisoup
