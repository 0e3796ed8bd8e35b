#pragma once

#include <vector>

#include "trisoup/core/image.hpp"
#include "trisoup/core/types.hpp"

namespace trisoup {

/// 10 log10(1 / MSE) over [0,1] images, capped at 99 dB.
double psnr(const ImageD& img, const ImageD& ref);

/// Exact nearest-neighbor queries over a fixed point set.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Vec3> points);

  /// Squared distance to the nearest stored point.
  double nearest_dist2(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    std::int32_t begin = 0, end = 0;  // leaf range
    std::int32_t left = -1, right = -1;
  };
  void build(std::int32_t node, std::int32_t begin, std::int32_t end, int depth);
  void search(std::int32_t node, const Vec3& q, double& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
};

struct ChamferResult {
  double accuracy = 0.0;      // mean over A of nearest distance to B
  double completeness = 0.0;  // mean over B of nearest distance to A
  double mean = 0.0;
};

ChamferResult chamfer(const std::vector<Vec3>& cloud_a, const std::vector<Vec3>& cloud_b);

}  // namespace trisoup
