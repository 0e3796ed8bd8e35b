#pragma once

#include <functional>

#include "trisoup/core/rng.hpp"
#include "trisoup/core/types.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup::testutil {

/// Central finite difference of f around x.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with an absolute floor: differences below the floor count
/// as exact agreement.
inline double rel_error(double got, double want, double abs_floor = 1e-12) {
  const double diff = std::abs(got - want);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(want), abs_floor);
}

/// Perturbs one raw scalar of one soup parameter array and evaluates f.
inline double eval_perturbed(TriangleSoup& soup, ParamArray& arr, std::size_t flat_index,
                             double delta, const std::function<double()>& f) {
  const double saved = arr.value[flat_index];
  arr.value[flat_index] = saved + delta;
  const double out = f();
  arr.value[flat_index] = saved;
  return out;
}

inline Vec3 random_unit(Rng& rng) {
  while (true) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

inline Mat3 random_rotation(Rng& rng) {
  const Vec4 q = rng.unit_quaternion();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

/// One-triangle soup with randomized parameters; handy for kernel tests.
inline TriangleSoup random_soup(Rng& rng, std::size_t count, int sh_degree = 3,
                                double spread = 1.0) {
  TriangleSoup soup(count, sh_degree);
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k) soup.mu.at(i)[k] = rng.uniform(-spread, spread);
    for (int k = 0; k < 3; ++k) soup.scale_raw.at(i)[k] = rng.uniform(-0.8, 0.3);
    const Vec4 q = rng.unit_quaternion();
    for (int k = 0; k < 4; ++k) soup.quat.at(i)[k] = q[k];
    soup.opacity_raw.at(i)[0] = rng.uniform(-1.5, 1.5);
    soup.sigma_raw.at(i)[0] = rng.uniform(0.5, 2.5);
    for (int k = 0; k < soup.sh_stride(); ++k) {
      soup.sh.at(i)[k] = rng.uniform(-0.4, 0.4);
    }
  }
  return soup;
}

}  // namespace trisoup::testutil
