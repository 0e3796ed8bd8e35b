#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trisoup/core/config.hpp"
#include "trisoup/core/types.hpp"

namespace trisoup {

/// Fixed local vertex directions of the canonical unit triangle, in the local
/// xy-plane at 330, 90 and 210 degrees. Their mean is zero and the edge from
/// vertex 2 to vertex 0 runs along local +x.
const std::array<Vec3, 3>& canonical_offsets();

/// One optimizable parameter array plus its gradient and Adam moment buffers,
/// all kept at count * stride scalars.
struct ParamArray {
  int stride = 1;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> m1;
  std::vector<double> m2;

  void resize(std::size_t count) {
    value.resize(count * stride, 0.0);
    grad.resize(count * stride, 0.0);
    m1.resize(count * stride, 0.0);
    m2.resize(count * stride, 0.0);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  double* at(std::size_t i) { return value.data() + i * stride; }
  const double* at(std::size_t i) const { return value.data() + i * stride; }
  double* grad_at(std::size_t i) { return grad.data() + i * stride; }
  const double* grad_at(std::size_t i) const { return grad.data() + i * stride; }
};

struct ActivatedTriangle {
  Vec3 scale;     // exp(scale_raw), world units
  double alpha;   // logistic(opacity_raw), in (0,1)
  double sigma;   // exp(sigma_raw), > 0
  Vec4 quat;      // normalized (w,x,y,z)
  Mat3 rot;       // rotation matrix of quat
};

struct VertexLayout {
  std::array<Vec3, 3> v;  // world-space vertices
  Vec3 normal_raw;        // (v2-v0) x (v1-v0), unnormalized
  Vec3 normal;            // unit
  Vec3 barycenter;
  double area = 0.0;
  bool degenerate = false;
};

/// Structure-of-arrays triangle soup. Every per-triangle quantity is stored
/// pre-activation; see activate().
class TriangleSoup {
 public:
  TriangleSoup() = default;
  TriangleSoup(std::size_t count, int sh_degree);

  std::size_t count() const { return count_; }
  int sh_degree() const { return sh_degree_; }
  int sh_coeffs() const { return (sh_degree_ + 1) * (sh_degree_ + 1); }
  int sh_stride() const { return 3 * sh_coeffs() * 3; }  // vertices * coeffs * rgb

  ParamArray mu;           // stride 3
  ParamArray sh;           // stride sh_stride()
  ParamArray scale_raw;    // stride 3
  ParamArray quat;         // stride 4, (w,x,y,z)
  ParamArray opacity_raw;  // stride 1
  ParamArray sigma_raw;    // stride 1

  /// SH coefficient block of one vertex: sh_coeffs() triples of RGB.
  const double* sh_vertex(std::size_t tri, int vertex) const {
    return sh.at(tri) + vertex * sh_coeffs() * 3;
  }
  double* sh_vertex_grad(std::size_t tri, int vertex) {
    return sh.grad_at(tri) + vertex * sh_coeffs() * 3;
  }

  ActivatedTriangle activate(std::size_t tri) const;
  VertexLayout vertex_layout(std::size_t tri) const;
  static VertexLayout layout_from(const Vec3& mu, const Mat3& rot, const Vec3& scale);

  /// Chain-rule helper: routes vertex-space gradients (one 3-vector per vertex)
  /// into the raw parameter gradient buffers of triangle `tri`.
  void accumulate_vertex_grads(std::size_t tri, const std::array<Vec3, 3>& dL_dv);

  /// Same, for gradients arriving on the activated opacity / sigma.
  void accumulate_alpha_grad(std::size_t tri, double dL_dalpha);
  void accumulate_sigma_grad(std::size_t tri, double dL_dsigma);

  void zero_grads();
  void renormalize_quaternions();

  /// abc / (4A) from the current layout.
  double circumradius(std::size_t tri) const;

  void resize(std::size_t count);
  void set_count(std::size_t count) { count_ = count; }

  std::vector<ParamArray*> params() {
    return {&mu, &sh, &scale_raw, &quat, &opacity_raw, &sigma_raw};
  }
  std::vector<const ParamArray*> params() const {
    return {&mu, &sh, &scale_raw, &quat, &opacity_raw, &sigma_raw};
  }

 private:
  std::size_t count_ = 0;
  int sh_degree_ = 3;
};

/// Quaternion-to-rotation backward: given dL/dR accumulates dL/d(raw quat),
/// including the normalization Jacobian.
Vec4 quat_rotation_backward(const Vec4& raw_quat, const Mat3& dL_dR);

/// Layout of an arbitrary vertex triple (normal, barycenter, area flags).
VertexLayout make_layout(const Vec3& v0, const Vec3& v1, const Vec3& v2);

struct SparseSeed {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;  // RGB in [0,1]

  void validate() const;
};

/// One triangle per seed point: equilateral, sized from the mean distance to
/// the point's three nearest neighbors, randomly rotated, DC color from the
/// point color.
TriangleSoup init_from_points(const SparseSeed& seed, const TrainConfig& cfg,
                              std::uint64_t rng_seed);

/// Median circumradius of a freshly initialized soup; densification uses it
/// as the default split-vs-clone size boundary.
double median_circumradius(const TriangleSoup& soup);

}  // namespace trisoup
