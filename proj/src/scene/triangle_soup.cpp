#include "trisoup/scene/triangle_soup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trisoup/core/error.hpp"
#include "trisoup/core/rng.hpp"

namespace trisoup {

const std::array<Vec3, 3>& canonical_offsets() {
  static const std::array<Vec3, 3> offsets = {
      Vec3(std::sqrt(3.0) / 2.0, -0.5, 0.0),   // 330 deg
      Vec3(0.0, 1.0, 0.0),                     // 90 deg
      Vec3(-std::sqrt(3.0) / 2.0, -0.5, 0.0),  // 210 deg
  };
  return offsets;
}

TriangleSoup::TriangleSoup(std::size_t count, int sh_degree) : sh_degree_(sh_degree) {
  mu.stride = 3;
  scale_raw.stride = 3;
  quat.stride = 4;
  opacity_raw.stride = 1;
  sigma_raw.stride = 1;
  sh.stride = sh_stride();
  resize(count);
}

void TriangleSoup::resize(std::size_t count) {
  count_ = count;
  for (ParamArray* p : params()) p->resize(count);
}

void TriangleSoup::zero_grads() {
  for (ParamArray* p : params()) p->zero_grad();
}

ActivatedTriangle TriangleSoup::activate(std::size_t tri) const {
  ActivatedTriangle a;
  const double* s = scale_raw.at(tri);
  a.scale = Vec3(std::exp(s[0]), std::exp(s[1]), std::exp(s[2]));
  a.alpha = sigmoid(opacity_raw.at(tri)[0]);
  a.sigma = std::exp(sigma_raw.at(tri)[0]);
  const double* q = quat.at(tri);
  Vec4 qv(q[0], q[1], q[2], q[3]);
  const double n = qv.norm();
  a.quat = n > 0.0 ? Vec4(qv / n) : Vec4(1, 0, 0, 0);
  const double w = a.quat[0], x = a.quat[1], y = a.quat[2], z = a.quat[3];
  a.rot << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return a;
}

VertexLayout TriangleSoup::layout_from(const Vec3& mu, const Mat3& rot, const Vec3& scale) {
  VertexLayout out;
  const auto& u = canonical_offsets();
  for (int j = 0; j < 3; ++j) out.v[j] = mu + rot * (scale[j] * u[j]);
  out.barycenter = (out.v[0] + out.v[1] + out.v[2]) / 3.0;
  out.normal_raw = (out.v[2] - out.v[0]).cross(out.v[1] - out.v[0]);
  const double len = out.normal_raw.norm();
  out.area = 0.5 * len;
  out.degenerate = out.area < kDegenerateArea;
  out.normal = out.degenerate ? Vec3(0, 0, 1) : Vec3(out.normal_raw / len);
  return out;
}

VertexLayout TriangleSoup::vertex_layout(std::size_t tri) const {
  const ActivatedTriangle a = activate(tri);
  return layout_from(Vec3(mu.at(tri)[0], mu.at(tri)[1], mu.at(tri)[2]), a.rot, a.scale);
}

VertexLayout make_layout(const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  VertexLayout out;
  out.v = {v0, v1, v2};
  out.barycenter = (v0 + v1 + v2) / 3.0;
  out.normal_raw = (v2 - v0).cross(v1 - v0);
  const double len = out.normal_raw.norm();
  out.area = 0.5 * len;
  out.degenerate = out.area < kDegenerateArea;
  out.normal = out.degenerate ? Vec3(0, 0, 1) : Vec3(out.normal_raw / len);
  return out;
}

Vec4 quat_rotation_backward(const Vec4& raw_quat, const Mat3& dL_dR) {
  const double n = raw_quat.norm();
  const Vec4 q = n > 0.0 ? Vec4(raw_quat / n) : Vec4(1, 0, 0, 0);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const Mat3& g = dL_dR;

  Vec4 dq;
  dq[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) +
               x * g(2, 1));
  dq[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
               z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  dq[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
               w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  dq[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
               y * g(1, 2) + x * g(2, 0) + y * g(2, 1));

  // through the normalization q = raw / |raw|
  return (dq - q * q.dot(dq)) / (n > 0.0 ? n : 1.0);
}

void TriangleSoup::accumulate_vertex_grads(std::size_t tri, const std::array<Vec3, 3>& dL_dv) {
  const ActivatedTriangle a = activate(tri);
  const auto& u = canonical_offsets();

  double* g_mu = mu.grad_at(tri);
  double* g_scale = scale_raw.grad_at(tri);
  double* g_quat = quat.grad_at(tri);

  Mat3 dL_dR = Mat3::Zero();
  for (int j = 0; j < 3; ++j) {
    const Vec3& gv = dL_dv[j];
    g_mu[0] += gv[0];
    g_mu[1] += gv[1];
    g_mu[2] += gv[2];
    // V = mu + R (s_j u_j): dV/ds_j = R u_j, and s_j = exp(raw_j)
    const Vec3 ru = a.rot * u[j];
    g_scale[j] += ru.dot(gv) * a.scale[j];
    dL_dR += (a.scale[j] * gv) * u[j].transpose();
  }
  const double* q = quat.at(tri);
  const Vec4 dq = quat_rotation_backward(Vec4(q[0], q[1], q[2], q[3]), dL_dR);
  for (int k = 0; k < 4; ++k) g_quat[k] += dq[k];
}

void TriangleSoup::accumulate_alpha_grad(std::size_t tri, double dL_dalpha) {
  const double alpha = sigmoid(opacity_raw.at(tri)[0]);
  opacity_raw.grad_at(tri)[0] += dL_dalpha * alpha * (1.0 - alpha);
}

void TriangleSoup::accumulate_sigma_grad(std::size_t tri, double dL_dsigma) {
  sigma_raw.grad_at(tri)[0] += dL_dsigma * std::exp(sigma_raw.at(tri)[0]);
}

void TriangleSoup::renormalize_quaternions() {
  for (std::size_t i = 0; i < count_; ++i) {
    double* q = quat.at(i);
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (n > 0.0) {
      for (int k = 0; k < 4; ++k) q[k] /= n;
    } else {
      q[0] = 1.0;
      q[1] = q[2] = q[3] = 0.0;
    }
  }
}

double TriangleSoup::circumradius(std::size_t tri) const {
  const VertexLayout lay = vertex_layout(tri);
  const double a = (lay.v[1] - lay.v[0]).norm();
  const double b = (lay.v[2] - lay.v[1]).norm();
  const double c = (lay.v[0] - lay.v[2]).norm();
  if (lay.area < kDegenerateArea) return 0.0;
  return a * b * c / (4.0 * lay.area);
}

void SparseSeed::validate() const {
  if (points.empty()) throw ValidationError("seed point set is empty");
  if (colors.size() != points.size()) {
    throw ValidationError("seed colors/points size mismatch");
  }
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw ValidationError("seed contains non-finite point coordinates");
  }
  for (const Vec3& c : colors) {
    if (!c.allFinite()) throw ValidationError("seed contains non-finite colors");
  }
}

namespace {

// Mean distance to the 3 nearest neighbors, brute force. Seed sets are the
// SfM sparse cloud; quadratic is acceptable up to a few hundred thousand
// points but we still chunk the outer loop for cache friendliness.
std::vector<double> mean_knn3_distance(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best[3] = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (pts[j] - pts[i]).squaredNorm();
      if (d2 < best[2]) {
        best[2] = d2;
        if (best[2] < best[1]) std::swap(best[1], best[2]);
        if (best[1] < best[0]) std::swap(best[0], best[1]);
      }
    }
    out[i] = (std::sqrt(best[0]) + std::sqrt(best[1]) + std::sqrt(best[2])) / 3.0;
  }
  return out;
}

constexpr double kShC0 = 0.28209479177387814;

}  // namespace

TriangleSoup init_from_points(const SparseSeed& seed, const TrainConfig& cfg,
                              std::uint64_t rng_seed) {
  seed.validate();
  if (seed.points.size() < 4) {
    throw ValidationError("initialization needs at least 4 seed points, got " +
                          std::to_string(seed.points.size()));
  }

  const std::vector<double> nn_dist = mean_knn3_distance(seed.points);
  TriangleSoup soup(seed.points.size(), cfg.sh_degree);
  Rng rng(rng_seed);

  const double opacity_raw_init = logit(cfg.init_opacity);
  for (std::size_t i = 0; i < seed.points.size(); ++i) {
    double* mu = soup.mu.at(i);
    mu[0] = seed.points[i][0];
    mu[1] = seed.points[i][1];
    mu[2] = seed.points[i][2];

    double dist = nn_dist[i];
    if (!(dist > 0.0) || !std::isfinite(dist)) dist = 1e-3;  // duplicated points

    // circumradius of the init equilateral equals the common scale
    const double scale_raw = std::log(dist);
    double* s = soup.scale_raw.at(i);
    s[0] = s[1] = s[2] = scale_raw;

    // diffuse falloff width 4/sigma spans sigma_init_fraction * dist
    soup.sigma_raw.at(i)[0] = std::log(4.0 / (cfg.sigma_init_fraction * dist));

    const Vec4 q = rng.unit_quaternion();
    double* qd = soup.quat.at(i);
    for (int k = 0; k < 4; ++k) qd[k] = q[k];

    soup.opacity_raw.at(i)[0] = opacity_raw_init;

    // DC band from the point color, identical for all three vertices
    for (int vtx = 0; vtx < 3; ++vtx) {
      double* block = soup.sh.at(i) + vtx * soup.sh_coeffs() * 3;
      for (int c = 0; c < 3; ++c) block[c] = (seed.colors[i][c] - 0.5) / kShC0;
    }
  }
  return soup;
}

double median_circumradius(const TriangleSoup& soup) {
  if (soup.count() == 0) return 0.0;
  std::vector<double> radii(soup.count());
  for (std::size_t i = 0; i < soup.count(); ++i) radii[i] = soup.circumradius(i);
  const std::size_t mid = radii.size() / 2;
  std::nth_element(radii.begin(), radii.begin() + mid, radii.end());
  return radii[mid];
}

}  // namespace trisoup
