#include "trisoup/io/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trisoup/core/error.hpp"
#include "trisoup/core/parallel.hpp"

namespace trisoup {

double psnr(const ImageD& img, const ImageD& ref) {
  require_same_shape(img, ref, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double d = img.data[i] - ref.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(img.data.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("KdTree3: empty point set");
  nodes_.reserve(2 * points_.size() / 8 + 8);
  nodes_.emplace_back();
  build(0, 0, static_cast<std::int32_t>(points_.size()), 0);
}

void KdTree3::build(std::int32_t node, std::int32_t begin, std::int32_t end, int depth) {
  constexpr std::int32_t kLeafSize = 16;
  if (end - begin <= kLeafSize) {
    nodes_[node].axis = -1;
    nodes_[node].begin = begin;
    nodes_[node].end = end;
    return;
  }
  // split on the widest axis at the median
  Vec3 lo = points_[begin], hi = points_[begin];
  for (std::int32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[i]);
    hi = hi.cwiseMax(points_[i]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::int32_t mid = (begin + end) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  nodes_[node].axis = axis;
  nodes_[node].split = points_[mid][axis];
  nodes_[node].left = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  build(nodes_[node].left, begin, mid, depth + 1);
  nodes_[node].right = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  build(nodes_[node].right, mid, end, depth + 1);
}

void KdTree3::search(std::int32_t node, const Vec3& q, double& best) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::int32_t i = n.begin; i < n.end; ++i) {
      best = std::min(best, (points_[i] - q).squaredNorm());
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const std::int32_t near = delta < 0.0 ? n.left : n.right;
  const std::int32_t far = delta < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (delta * delta < best) search(far, q, best);
}

double KdTree3::nearest_dist2(const Vec3& query) const {
  double best = std::numeric_limits<double>::infinity();
  search(0, query, best);
  return best;
}

ChamferResult chamfer(const std::vector<Vec3>& cloud_a, const std::vector<Vec3>& cloud_b) {
  if (cloud_a.empty() || cloud_b.empty()) {
    throw ValidationError("chamfer: point clouds must be non-empty");
  }
  const KdTree3 tree_a(cloud_a);
  const KdTree3 tree_b(cloud_b);

  std::vector<double> acc(cloud_a.size()), comp(cloud_b.size());
  parallel_for(static_cast<int>(cloud_a.size()),
               [&](int i) { acc[i] = std::sqrt(tree_b.nearest_dist2(cloud_a[i])); });
  parallel_for(static_cast<int>(cloud_b.size()),
               [&](int i) { comp[i] = std::sqrt(tree_a.nearest_dist2(cloud_b[i])); });

  ChamferResult res;
  res.accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / acc.size();
  res.completeness = std::accumulate(comp.begin(), comp.end(), 0.0) / comp.size();
  res.mean = 0.5 * (res.accuracy + res.completeness);
  return res;
}

}  // namespace trisoup
