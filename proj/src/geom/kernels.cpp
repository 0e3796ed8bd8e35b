#include "trisoup/geom/kernels.hpp"

#include <cmath>
#include <limits>

namespace trisoup {

namespace {

// For L = g . (a x b):  dL/da = b x g,  dL/db = g x a.
inline Vec3 cross_grad_a(const Vec3& b, const Vec3& g) { return b.cross(g); }
inline Vec3 cross_grad_b(const Vec3& g, const Vec3& a) { return g.cross(a); }

struct EdgeFrame {
  Vec3 origin;
  Vec3 dir;     // unit, from edge vertex k to vertex k+1
  double len;
  Vec3 inward;  // unit, dir x n_hat
};

EdgeFrame edge_frame(const VertexLayout& tri, int k) {
  EdgeFrame f;
  f.origin = tri.v[k];
  const Vec3 w = tri.v[(k + 1) % 3] - tri.v[k];
  f.len = w.norm();
  f.dir = f.len > 0.0 ? Vec3(w / f.len) : Vec3(1, 0, 0);
  f.inward = f.dir.cross(tri.normal);
  return f;
}

}  // namespace

Intersection intersect(const Ray& ray, const VertexLayout& tri, double near_plane) {
  Intersection out;
  if (tri.degenerate) return out;

  const Vec3& n = tri.normal_raw;
  const double kappa = n.dot(ray.dir);
  if (std::abs(kappa / n.norm()) < kParallelEps) return out;

  const double d = n.dot(tri.barycenter - ray.origin) / kappa;
  if (!(d > near_plane) || !std::isfinite(d)) return out;

  const Vec3 p = ray.origin + d * ray.dir;

  // triple-product barycentrics; normal scale cancels in the ratio
  const Vec3 e1 = tri.v[1] - tri.v[0];
  const Vec3 e2 = tri.v[2] - tri.v[0];
  const double denom = n.dot(e1.cross(e2));
  if (denom == 0.0) return out;
  Vec3 lambda;
  lambda[0] = n.dot((tri.v[2] - tri.v[1]).cross(p - tri.v[1])) / denom;
  lambda[1] = n.dot((tri.v[0] - tri.v[2]).cross(p - tri.v[2])) / denom;
  lambda[2] = n.dot((tri.v[1] - tri.v[0]).cross(p - tri.v[0])) / denom;

  out.valid = true;
  out.depth = d;
  out.point = p;
  out.lambda = lambda;

  // signed boundary distance: min over edge-line distances inside, minus the
  // distance to the nearest edge segment or corner outside
  double h[3], t[3];
  EdgeFrame frames[3];
  bool inside = true;
  for (int k = 0; k < 3; ++k) {
    frames[k] = edge_frame(tri, k);
    const Vec3 rel = p - frames[k].origin;
    h[k] = frames[k].inward.dot(rel);
    t[k] = frames[k].dir.dot(rel);
    inside = inside && h[k] >= 0.0;
  }

  if (inside) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (h[k] < h[best]) best = k;
    out.edge_dist = h[best];
    out.nearest_edge = best;
  } else {
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0.0) {
        const double dist = (p - tri.v[k]).norm();
        if (dist < best_dist) {
          best_dist = dist;
          out.nearest_edge = -1;
          out.corner_vertex = k;
        }
      } else if (t[k] > frames[k].len) {
        const double dist = (p - tri.v[(k + 1) % 3]).norm();
        if (dist < best_dist) {
          best_dist = dist;
          out.nearest_edge = -1;
          out.corner_vertex = (k + 1) % 3;
        }
      } else {
        const double dist = std::abs(h[k]);
        if (dist < best_dist) {
          best_dist = dist;
          out.nearest_edge = k;
          out.corner_vertex = -1;
        }
      }
    }
    out.edge_dist = -best_dist;
  }
  return out;
}

std::array<Vec3, 3> intersect_backward(const Ray& ray, const VertexLayout& tri,
                                       const Intersection& isect, double g_depth,
                                       const Vec3& g_lambda, double g_edge_dist,
                                       const Vec3& g_unit_normal) {
  std::array<Vec3, 3> gv = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  if (!isect.valid || tri.degenerate) return gv;

  const Vec3& n_raw = tri.normal_raw;
  const Vec3& n_hat = tri.normal;
  const Vec3& p = isect.point;
  const double d = isect.depth;

  Vec3 g_p = Vec3::Zero();
  Vec3 g_nraw = Vec3::Zero();
  Vec3 g_nhat = g_unit_normal;

  // ---- signed edge distance ----
  if (g_edge_dist != 0.0) {
    if (isect.corner_vertex >= 0) {
      const Vec3 u = p - tri.v[isect.corner_vertex];
      const double un = u.norm();
      if (un > 0.0) {
        // l = -|p - corner|
        const Vec3 dir = u / un;
        g_p += -g_edge_dist * dir;
        gv[isect.corner_vertex] += g_edge_dist * dir;
      }
    } else if (isect.nearest_edge >= 0) {
      const int k = isect.nearest_edge;
      const int k1 = (k + 1) % 3;
      const EdgeFrame f = edge_frame(tri, k);
      const Vec3 rel = p - f.origin;
      // l = (e_hat x n_hat) . (p - origin)
      g_p += g_edge_dist * f.inward;
      gv[k] -= g_edge_dist * f.inward;
      const Vec3 g_ehat = g_edge_dist * cross_grad_a(n_hat, rel);
      g_nhat += g_edge_dist * cross_grad_b(rel, f.dir);
      if (f.len > 0.0) {
        const Vec3 g_w = (g_ehat - f.dir * f.dir.dot(g_ehat)) / f.len;
        gv[k1] += g_w;
        gv[k] -= g_w;
      }
    }
  }

  // ---- barycentric coordinates ----
  const Vec3 e1 = tri.v[1] - tri.v[0];
  const Vec3 e2 = tri.v[2] - tri.v[0];
  const double denom = n_raw.dot(e1.cross(e2));
  if (denom != 0.0 && g_lambda.squaredNorm() > 0.0) {
    const Vec3 edge[3] = {tri.v[2] - tri.v[1], tri.v[0] - tri.v[2], tri.v[1] - tri.v[0]};
    const int base[3] = {1, 2, 0};  // numerator j uses p - V^{base[j]}
    double g_denom = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double g_num = g_lambda[j] / denom;
      g_denom -= g_lambda[j] * isect.lambda[j] / denom;
      if (g_num == 0.0) continue;
      const Vec3 rel = p - tri.v[base[j]];
      const Vec3 gm = g_num * n_raw;
      g_nraw += g_num * edge[j].cross(rel);
      const Vec3 g_edge = cross_grad_a(rel, gm);
      const Vec3 g_rel = cross_grad_b(gm, edge[j]);
      g_p += g_rel;
      gv[base[j]] -= g_rel;
      // edge[0] = V2 - V1, edge[1] = V0 - V2, edge[2] = V1 - V0
      const int plus[3] = {2, 0, 1};
      const int minus[3] = {1, 2, 0};
      gv[plus[j]] += g_edge;
      gv[minus[j]] -= g_edge;
    }
    if (g_denom != 0.0) {
      const Vec3 gm = g_denom * n_raw;
      g_nraw += g_denom * e1.cross(e2);
      const Vec3 g_e1 = cross_grad_a(e2, gm);
      const Vec3 g_e2 = cross_grad_b(gm, e1);
      gv[1] += g_e1;
      gv[0] -= g_e1;
      gv[2] += g_e2;
      gv[0] -= g_e2;
    }
  }

  // ---- depth (direct upstream plus the P = C + d r chain) ----
  const double g_d_total = g_depth + ray.dir.dot(g_p);
  if (g_d_total != 0.0) {
    const double kappa = n_raw.dot(ray.dir);
    const Vec3 u = tri.barycenter - ray.origin;
    g_nraw += g_d_total * (u - d * ray.dir) / kappa;
    const Vec3 g_b = g_d_total * n_raw / kappa;
    for (int j = 0; j < 3; ++j) gv[j] += g_b / 3.0;
  }

  // ---- unit normal -> raw normal -> vertices ----
  const double n_len = n_raw.norm();
  g_nraw += (g_nhat - n_hat * n_hat.dot(g_nhat)) / n_len;
  // n_raw = e2 x e1
  const Vec3 g_e2 = cross_grad_a(e1, g_nraw);
  const Vec3 g_e1 = cross_grad_b(g_nraw, e2);
  gv[1] += g_e1;
  gv[0] -= g_e1;
  gv[2] += g_e2;
  gv[0] -= g_e2;

  return gv;
}

DiffuseWeight diffuse_weight(double l, double sigma) {
  DiffuseWeight out;
  double arg = sigma * l;
  arg = std::clamp(arg, -60.0, 60.0);
  out.w = sigmoid(arg);
  const double slope = out.w * (1.0 - out.w);
  out.dw_dl = sigma * slope;
  out.dw_dsigma = l * slope;
  return out;
}

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.4453057213202769,
                           -0.5900435899266435};

}  // namespace

void sh_basis(const Vec3& dir, int degree, double* out) {
  const double x = dir[0], y = dir[1], z = dir[2];
  out[0] = kC0;
  if (degree < 1) return;
  out[1] = -kC1 * y;
  out[2] = kC1 * z;
  out[3] = -kC1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  out[4] = kC2[0] * x * y;
  out[5] = kC2[1] * y * z;
  out[6] = kC2[2] * (2.0 * zz - xx - yy);
  out[7] = kC2[3] * x * z;
  out[8] = kC2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kC3[0] * y * (3.0 * xx - yy);
  out[10] = kC3[1] * x * y * z;
  out[11] = kC3[2] * y * (4.0 * zz - xx - yy);
  out[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  out[14] = kC3[5] * z * (xx - yy);
  out[15] = kC3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_grad(const Vec3& dir, int degree, Vec3* out) {
  const double x = dir[0], y = dir[1], z = dir[2];
  out[0] = Vec3::Zero();
  if (degree < 1) return;
  out[1] = Vec3(0.0, -kC1, 0.0);
  out[2] = Vec3(0.0, 0.0, kC1);
  out[3] = Vec3(-kC1, 0.0, 0.0);
  if (degree < 2) return;
  out[4] = kC2[0] * Vec3(y, x, 0.0);
  out[5] = kC2[1] * Vec3(0.0, z, y);
  out[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
  out[7] = kC2[3] * Vec3(z, 0.0, x);
  out[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
  if (degree < 3) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  out[9] = kC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
  out[10] = kC3[1] * Vec3(y * z, x * z, x * y);
  out[11] = kC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
  out[12] = kC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
  out[14] = kC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
  out[15] = kC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
}

ShColor eval_sh_vertex(const double* coeffs, int degree, const Vec3& dir) {
  double basis[kMaxShCoeffs];
  sh_basis(dir, degree, basis);
  const int n = sh_coeff_count(degree);
  ShColor out;
  for (int c = 0; c < 3; ++c) {
    double v = 0.5;
    for (int k = 0; k < n; ++k) v += basis[k] * coeffs[k * 3 + c];
    out.clamped[c] = v < 0.0;
    out.rgb[c] = out.clamped[c] ? 0.0 : v;
  }
  return out;
}

Vec3 eval_sh_vertex_backward(const double* coeffs, int degree, const Vec3& dir,
                             const ShColor& fwd, const Vec3& g_rgb, double* g_coeffs) {
  double basis[kMaxShCoeffs];
  Vec3 basis_grad[kMaxShCoeffs];
  sh_basis(dir, degree, basis);
  sh_basis_grad(dir, degree, basis_grad);
  const int n = sh_coeff_count(degree);
  Vec3 g_dir = Vec3::Zero();
  for (int c = 0; c < 3; ++c) {
    if (fwd.clamped[c] || g_rgb[c] == 0.0) continue;
    for (int k = 0; k < n; ++k) {
      g_coeffs[k * 3 + c] += g_rgb[c] * basis[k];
      g_dir += g_rgb[c] * coeffs[k * 3 + c] * basis_grad[k];
    }
  }
  return g_dir;
}

}  // namespace trisoup
