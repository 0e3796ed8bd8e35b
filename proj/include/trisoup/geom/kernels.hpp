#pragma once

#include <array>

#include "trisoup/geom/camera.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

struct Intersection {
  bool valid = false;
  double depth = 0.0;      // Euclidean distance along the unit ray
  Vec3 point = Vec3::Zero();
  Vec3 lambda = Vec3::Zero();
  double edge_dist = 0.0;  // signed in-plane distance to the boundary, > 0 inside

  // region of the signed-distance evaluation, reused by the backward pass
  int nearest_edge = -1;    // edge index k: (V^k, V^{k+1 mod 3})
  int corner_vertex = -1;   // >= 0 when the nearest boundary point is a vertex
};

/// Per-edge frame of one triangle: unit direction, length, and the in-plane
/// inward unit vector. Constant per triangle, so render passes cache it.
struct TriangleFrames {
  struct Edge {
    Vec3 origin;
    Vec3 dir;
    double len;
    Vec3 inward;
  };
  std::array<Edge, 3> edge;
};

TriangleFrames make_frames(const VertexLayout& tri);

/// Plane hit, barycentric coordinates from triple products, and signed
/// boundary distance for one ray against one triangle.
Intersection intersect(const Ray& ray, const VertexLayout& tri, double near_plane);
Intersection intersect(const Ray& ray, const VertexLayout& tri,
                       const TriangleFrames& frames, double near_plane);

/// Reverse-mode of intersect(). Upstream gradients arrive on depth, lambda,
/// edge distance, and the *unit* normal; returns dL/dV for the three vertices.
std::array<Vec3, 3> intersect_backward(const Ray& ray, const VertexLayout& tri,
                                       const Intersection& isect, double g_depth,
                                       const Vec3& g_lambda, double g_edge_dist,
                                       const Vec3& g_unit_normal,
                                       const TriangleFrames* frames = nullptr);

struct DiffuseWeight {
  double w = 0.0;
  double dw_dl = 0.0;
  double dw_dsigma = 0.0;
};

/// Sigmoid edge falloff: w = 1 / (1 + exp(-sigma * l)). Exponent magnitude is
/// capped at 60 to keep the kernel total.
DiffuseWeight diffuse_weight(double l, double sigma);

inline constexpr int kMaxShCoeffs = 16;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real SH basis (graphics convention) for a unit direction, degrees 0..3.
void sh_basis(const Vec3& dir, int degree, double* out);

/// Componentwise polynomial gradient of the basis w.r.t. the direction.
void sh_basis_grad(const Vec3& dir, int degree, Vec3* out);

struct ShColor {
  Vec3 rgb = Vec3::Zero();
  std::array<bool, 3> clamped = {false, false, false};
};

/// Contracts one vertex coefficient block (layout [coeff][rgb]) with the basis,
/// adds the 0.5 offset, clamps at zero.
ShColor eval_sh_vertex(const double* coeffs, int degree, const Vec3& dir);
ShColor eval_sh_vertex_cached(const double* coeffs, int coeff_count, const double* basis);

/// Backward of eval_sh_vertex: fills dL/dcoeffs and returns dL/ddir.
Vec3 eval_sh_vertex_backward(const double* coeffs, int degree, const Vec3& dir,
                             const ShColor& fwd, const Vec3& g_rgb, double* g_coeffs);
Vec3 eval_sh_vertex_backward_cached(const double* coeffs, int coeff_count,
                                    const double* basis, const Vec3* basis_grad,
                                    const ShColor& fwd, const Vec3& g_rgb,
                                    double* g_coeffs);

inline Vec3 interpolate_color(const Vec3& c0, const Vec3& c1, const Vec3& c2,
                              const Vec3& lambda) {
  return lambda[0] * c0 + lambda[1] * c1 + lambda[2] * c2;
}

}  // namespace trisoup
