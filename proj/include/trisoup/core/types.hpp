#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace trisoup {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Area below which a triangle is treated as degenerate and skipped.
inline constexpr double kDegenerateArea = 1e-12;

// Rays closer to parallel than this against a triangle plane never hit.
inline constexpr double kParallelEps = 1e-9;

// Contributions with effective opacity below 1/255 are ignored.
inline constexpr double kMinAlphaContrib = 1.0 / 255.0;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace trisoup
