#include <cmath>

#include "trisoup/core/error.hpp"
#include "trisoup/loss/losses.hpp"

namespace trisoup {

NormalConsistencyResult normal_consistency_loss(const ImageD& normal, const ImageD& depth,
                                                const Camera& cam, bool with_grad) {
  TRISOUP_CHECK(normal.width == depth.width && normal.height == depth.height,
                "normal_consistency_loss: shape mismatch");
  NormalConsistencyResult res;
  if (with_grad) {
    res.grad_normal = ImageD(normal.width, normal.height, 3);
    res.grad_depth = ImageD(depth.width, depth.height, 1);
  }

  const int w = depth.width, h = depth.height;

  // first pass counts valid pixels so gradients carry the final 1/M factor
  int valid = 0;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      if (depth.at(x, y, 0) <= 0.0 || depth.at(x + 1, y, 0) <= 0.0 ||
          depth.at(x, y + 1, 0) <= 0.0) {
        continue;
      }
      const Vec3 nb(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
      if (nb.norm() < 1e-9) continue;
      ++valid;
    }
  }
  res.valid_pixels = valid;
  if (valid == 0) return res;
  const double inv_m = 1.0 / valid;

  double total = 0.0;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const double d0 = depth.at(x, y, 0);
      const double d1 = depth.at(x + 1, y, 0);
      const double d2 = depth.at(x, y + 1, 0);
      if (d0 <= 0.0 || d1 <= 0.0 || d2 <= 0.0) continue;
      const Vec3 nb(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
      const double nb_len = nb.norm();
      if (nb_len < 1e-9) continue;

      const Ray r0 = cam.pixel_ray(x, y);
      const Ray r1 = cam.pixel_ray(x + 1, y);
      const Ray r2 = cam.pixel_ray(x, y + 1);
      const Vec3 x0 = r0.origin + d0 * r0.dir;
      const Vec3 x1 = r1.origin + d1 * r1.dir;
      const Vec3 x2 = r2.origin + d2 * r2.dir;
      const Vec3 a = x1 - x0;
      const Vec3 b = x2 - x0;
      const Vec3 nd_raw = b.cross(a);  // oriented toward the camera
      const double nd_len = nd_raw.norm();
      if (nd_len < 1e-12) continue;
      const Vec3 nd = nd_raw / nd_len;
      const Vec3 nn = nb / nb_len;

      total += 1.0 - nn.dot(nd);

      if (with_grad) {
        // d(1 - nn . nd)
        const Vec3 g_nn = -inv_m * nd;
        const Vec3 g_nd = -inv_m * nn;
        const Vec3 g_nb = (g_nn - nn * nn.dot(g_nn)) / nb_len;
        for (int c = 0; c < 3; ++c) res.grad_normal.at(x, y, c) += g_nb[c];

        const Vec3 g_ndraw = (g_nd - nd * nd.dot(g_nd)) / nd_len;
        // nd_raw = b x a
        const Vec3 g_b = a.cross(g_ndraw);
        const Vec3 g_a = g_ndraw.cross(b);
        const Vec3 g_x1 = g_a;
        const Vec3 g_x2 = g_b;
        const Vec3 g_x0 = -(g_a + g_b);
        res.grad_depth.at(x, y, 0) += r0.dir.dot(g_x0);
        res.grad_depth.at(x + 1, y, 0) += r1.dir.dot(g_x1);
        res.grad_depth.at(x, y + 1, 0) += r2.dir.dot(g_x2);
      }
    }
  }
  res.value = total * inv_m;
  return res;
}

SmoothnessResult smoothness_loss(const ImageD& depth, const ImageD& target_rgb,
                                 bool positive_exponent, bool with_grad) {
  TRISOUP_CHECK(depth.width == target_rgb.width && depth.height == target_rgb.height,
                "smoothness_loss: shape mismatch");
  SmoothnessResult res;
  if (with_grad) res.grad_depth = ImageD(depth.width, depth.height, 1);

  const ImageD gray = to_grayscale(target_rgb);
  const int w = depth.width, h = depth.height;
  const double n = static_cast<double>(w) * h;
  const double sign_exp = positive_exponent ? 1.0 : -1.0;

  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && depth.at(x, y, 0) > 0.0 && depth.at(x + 1, y, 0) > 0.0) {
        const double dd = depth.at(x + 1, y, 0) - depth.at(x, y, 0);
        const double di = std::abs(gray.at(x + 1, y, 0) - gray.at(x, y, 0));
        const double weight = std::exp(sign_exp * di);
        total += std::abs(dd) * weight;
        if (with_grad && dd != 0.0) {
          const double g = (dd > 0.0 ? 1.0 : -1.0) * weight / n;
          res.grad_depth.at(x + 1, y, 0) += g;
          res.grad_depth.at(x, y, 0) -= g;
        }
      }
      if (y + 1 < h && depth.at(x, y, 0) > 0.0 && depth.at(x, y + 1, 0) > 0.0) {
        const double dd = depth.at(x, y + 1, 0) - depth.at(x, y, 0);
        const double di = std::abs(gray.at(x, y + 1, 0) - gray.at(x, y, 0));
        const double weight = std::exp(sign_exp * di);
        total += std::abs(dd) * weight;
        if (with_grad && dd != 0.0) {
          const double g = (dd > 0.0 ? 1.0 : -1.0) * weight / n;
          res.grad_depth.at(x, y + 1, 0) += g;
          res.grad_depth.at(x, y, 0) -= g;
        }
      }
    }
  }
  res.value = total / n;
  return res;
}

}  // namespace trisoup
