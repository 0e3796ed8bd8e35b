#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "trisoup/loss/losses.hpp"

using namespace trisoup;
using namespace trisoup::testutil;

namespace {

ImageD random_image(Rng& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
  ImageD img(w, h, c);
  for (auto& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

// direct per-window SSIM, the textbook definition, no shared code with the
// production path beyond the constants
double ssim_oracle(const ImageD& a, const ImageD& b) {
  const int win = 11;
  std::vector<double> g(win);
  double gsum = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gsum += g[i];
  }
  for (double& v : g) v /= gsum;

  double total = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int wy = 0; wy + win <= a.height; ++wy) {
      for (int wx = 0; wx + win <= a.width; ++wx) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int dy = 0; dy < win; ++dy) {
          for (int dx = 0; dx < win; ++dx) {
            const double wgt = g[dy] * g[dx];
            const double xv = a.at(wx + dx, wy + dy, c);
            const double yv = b.at(wx + dx, wy + dy, c);
            mx += wgt * xv;
            my += wgt * yv;
            mxx += wgt * xv * xv;
            myy += wgt * yv * yv;
            mxy += wgt * xv * yv;
          }
        }
        const double sx = mxx - mx * mx;
        const double sy = myy - my * my;
        const double sxy = mxy - mx * my;
        const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
        total += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                 ((mx * mx + my * my + c1) * (sx + sy + c2));
        ++count;
      }
    }
  }
  return total / count;
}

// analytic-depth image of a plane through `p0` with normal `n`, 0 off-plane
ImageD plane_depth(const Camera& cam, const Vec3& p0, const Vec3& n) {
  ImageD depth(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Ray r = cam.pixel_ray(x, y);
      const double denom = n.dot(r.dir);
      if (std::abs(denom) < 1e-9) continue;
      const double d = n.dot(p0 - r.origin) / denom;
      if (d > 0.0) depth.at(x, y, 0) = d;
    }
  }
  return depth;
}

Camera loss_camera(int w, int h) {
  return make_lookat_camera(Vec3(0, 0, -3), Vec3(0, 0, 0), Vec3(0, -1, 0), w, h, 0.9 * w);
}

}  // namespace

TEST_CASE("photometric loss vanishes for identical images") {
  Rng rng(61);
  const ImageD img = random_image(rng, 24, 20, 3);
  const PhotometricResult res = photometric_loss(img, img, 0.2);
  CHECK(res.l1 == doctest::Approx(0.0));
  CHECK(res.ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pure L1 on constant images differing by 0.1") {
  ImageD a(16, 16, 3, 0.4), b(16, 16, 3, 0.5);
  const PhotometricResult res = photometric_loss(a, b, 0.0);
  CHECK(res.value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("SSIM matches the direct windowed oracle on random pairs") {
  Rng rng(63);
  for (int trial = 0; trial < 3; ++trial) {
    const ImageD a = random_image(rng, 32, 32, 3);
    const ImageD b = random_image(rng, 32, 32, 3);
    CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-6);
  }
}

TEST_CASE("photometric loss is non-negative") {
  Rng rng(64);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageD a = random_image(rng, 24, 24, 3);
    const ImageD b = random_image(rng, 24, 24, 3);
    CHECK(photometric_loss(a, b, 0.2).value >= 0.0);
  }
}

TEST_CASE("photometric gradient matches finite differences") {
  Rng rng(65);
  ImageD x = random_image(rng, 18, 16, 3);
  const ImageD y = random_image(rng, 18, 16, 3);
  const double gamma = 0.3;
  const PhotometricResult res = photometric_loss(x, y, gamma);

  const double h = 1e-6;
  for (int k = 0; k < 60; ++k) {
    const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<int>(x.data.size() - 1)));
    const double saved = x.data[idx];
    x.data[idx] = saved + h;
    const double up = photometric_loss(x, y, gamma, false).value;
    x.data[idx] = saved - h;
    const double dn = photometric_loss(x, y, gamma, false).value;
    x.data[idx] = saved;
    const double fd = (up - dn) / (2 * h);
    CHECK(rel_error(res.grad.data[idx], fd, 1e-8) < 1e-4);
  }
}

TEST_CASE("normal consistency is zero for an aligned fronto-parallel plane") {
  const Camera cam = loss_camera(32, 32);
  const ImageD depth = plane_depth(cam, Vec3(0, 0, 0), Vec3(0, 0, 1));
  ImageD normal(32, 32, 3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) normal.at(x, y, 2) = -1.0;  // toward the camera

  const NormalConsistencyResult res = normal_consistency_loss(normal, depth, cam);
  CHECK(res.valid_pixels > 900);
  CHECK(res.value < 1e-6);
}

TEST_CASE("normal consistency is two for antipodal normals") {
  const Camera cam = loss_camera(24, 24);
  const ImageD depth = plane_depth(cam, Vec3(0, 0, 0), Vec3(0, 0, 1));
  ImageD normal(24, 24, 3);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) normal.at(x, y, 2) = 1.0;  // away from the camera
  const NormalConsistencyResult res = normal_consistency_loss(normal, depth, cam);
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("depth-derived normals of a tilted plane match the analytic normal") {
  const Camera cam = loss_camera(128, 128);
  // 30-degree tilt about the y axis
  const double ang = 30.0 * M_PI / 180.0;
  Vec3 n_plane(std::sin(ang), 0.0, -std::cos(ang));
  const ImageD depth = plane_depth(cam, Vec3(0, 0, 0), n_plane);

  // camera-facing orientation
  if (n_plane.dot(cam.forward()) > 0.0) n_plane = -n_plane;
  ImageD normal(128, 128, 3);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x)
      for (int c = 0; c < 3; ++c) normal.at(x, y, c) = n_plane[c];

  const NormalConsistencyResult res = normal_consistency_loss(normal, depth, cam);
  CHECK(res.valid_pixels > 100 * 100);
  // 1 - cos(0.5 deg) bounds the admissible misalignment
  CHECK(res.value < 1.0 - std::cos(0.5 * M_PI / 180.0));
}

TEST_CASE("normal consistency gradients match finite differences") {
  Rng rng(67);
  const Camera cam = loss_camera(12, 12);
  ImageD depth = plane_depth(cam, Vec3(0, 0, 0), Vec3(0.2, -0.1, 1).normalized());
  for (auto& v : depth.data) v += rng.uniform(-0.02, 0.02);
  ImageD normal = random_image(rng, 12, 12, 3, -1.0, 1.0);

  const NormalConsistencyResult res = normal_consistency_loss(normal, depth, cam);
  REQUIRE(res.valid_pixels > 0);

  const double h = 1e-6;
  for (int k = 0; k < 40; ++k) {
    const std::size_t idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(normal.data.size() - 1)));
    const double saved = normal.data[idx];
    normal.data[idx] = saved + h;
    const double up = normal_consistency_loss(normal, depth, cam, false).value;
    normal.data[idx] = saved - h;
    const double dn = normal_consistency_loss(normal, depth, cam, false).value;
    normal.data[idx] = saved;
    const double fd = (up - dn) / (2 * h);
    CHECK(rel_error(res.grad_normal.data[idx], fd, 1e-8) < 1e-4);
  }
  for (int k = 0; k < 40; ++k) {
    const std::size_t idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(depth.data.size() - 1)));
    const double saved = depth.data[idx];
    depth.data[idx] = saved + h;
    const double up = normal_consistency_loss(normal, depth, cam, false).value;
    depth.data[idx] = saved - h;
    const double dn = normal_consistency_loss(normal, depth, cam, false).value;
    depth.data[idx] = saved;
    const double fd = (up - dn) / (2 * h);
    CHECK(rel_error(res.grad_depth.data[idx], fd, 1e-8) < 1e-4);
  }
}

TEST_CASE("smoothness loss on a depth step matches the closed form") {
  const int W = 20, H = 12;
  ImageD rgb(W, H, 3, 0.5);  // constant color
  ImageD depth(W, H, 1, 1.0);
  CHECK(smoothness_loss(depth, rgb).value == doctest::Approx(0.0));

  for (int y = 0; y < H; ++y)
    for (int x = 10; x < W; ++x) depth.at(x, y, 0) = 2.0;
  // one unit step per row, weight exp(0) = 1, normalized by W*H
  const double expected = (H * 1.0 * std::exp(0.0)) / (W * H);
  const SmoothnessResult res = smoothness_loss(depth, rgb);
  CHECK(res.value == doctest::Approx(expected).epsilon(1e-12));

  // the same step aligned with a strong image edge costs strictly less
  ImageD rgb_edge = rgb;
  for (int y = 0; y < H; ++y)
    for (int x = 10; x < W; ++x)
      for (int c = 0; c < 3; ++c) rgb_edge.at(x, y, c) = 1.0;
  CHECK(smoothness_loss(depth, rgb_edge).value < res.value);

  // the positive-exponent variant rewards the edge instead
  CHECK(smoothness_loss(depth, rgb_edge, true).value > res.value);
}

TEST_CASE("smoothness gradient matches finite differences") {
  Rng rng(69);
  const int W = 14, H = 10;
  const ImageD rgb = random_image(rng, W, H, 3);
  ImageD depth(W, H, 1);
  for (auto& v : depth.data) v = rng.uniform(0.5, 2.0);

  const SmoothnessResult res = smoothness_loss(depth, rgb);
  const double h = 1e-6;
  for (std::size_t idx = 0; idx < depth.data.size(); ++idx) {
    const double saved = depth.data[idx];
    depth.data[idx] = saved + h;
    const double up = smoothness_loss(depth, rgb, false, false).value;
    depth.data[idx] = saved - h;
    const double dn = smoothness_loss(depth, rgb, false, false).value;
    depth.data[idx] = saved;
    const double fd = (up - dn) / (2 * h);
    CHECK(rel_error(res.grad_depth.data[idx], fd, 1e-8) < 1e-4);
  }
}

namespace {

/// Canonical triangle A at the origin plus a point-mirrored partner whose
/// edge 0 coincides with A's edge 0 (equal winding, coplanar). `gap` slides
/// the partner along A's edge-0 outward direction; `dihedral_deg` then folds
/// it about the shared edge axis.
TriangleSoup two_connected_triangles(double gap, double dihedral_deg) {
  TriangleSoup soup(2, 0);
  soup.quat.at(0)[0] = 1.0;
  // triangle B: 180-degree rotation about local z puts its edge 0 against A's
  soup.quat.at(1)[0] = 0.0;
  soup.quat.at(1)[3] = 1.0;

  const auto& u = canonical_offsets();
  const Vec3 mu_b = u[0] + u[1];
  for (int k = 0; k < 3; ++k) soup.mu.at(1)[k] = mu_b[k];

  const VertexLayout la = soup.vertex_layout(0);
  const EdgeRef ea = make_edge_ref(la, 0, 0);

  // translate along the outward direction, then fold about the edge axis
  Vec3 mu_shift = mu_b + gap * ea.outward;
  const double ang = dihedral_deg * M_PI / 180.0;
  if (ang != 0.0) {
    const Vec3 axis = ea.dir;
    const Eigen::AngleAxisd rot(ang, axis);
    const Vec3 pivot = ea.midpoint;
    mu_shift = pivot + rot * (mu_shift - pivot);
    const Quat q_b(0.0, 0.0, 0.0, 1.0);
    const Quat q_new = Quat(rot) * q_b;
    soup.quat.at(1)[0] = q_new.w();
    soup.quat.at(1)[1] = q_new.x();
    soup.quat.at(1)[2] = q_new.y();
    soup.quat.at(1)[3] = q_new.z();
  }
  for (int k = 0; k < 3; ++k) soup.mu.at(1)[k] = mu_shift[k];
  return soup;
}

EdgeGraph graph_for_pair(const TriangleSoup& soup) {
  EdgeGraph graph;
  graph.soup_count = soup.count();
  EdgeConnection conn;
  conn.a = make_edge_ref(soup.vertex_layout(0), 0, 0);
  conn.b = make_edge_ref(soup.vertex_layout(1), 1, 0);
  // A's edge 0 runs v0->v1; B's edge 0 runs back, so the pairing is crossed
  conn.crossed = true;
  graph.connections.push_back(conn);
  return graph;
}

}  // namespace

TEST_CASE("connectivity loss vanishes for a shared coplanar edge") {
  TriangleSoup soup = two_connected_triangles(0.0, 0.0);
  const EdgeGraph graph = graph_for_pair(soup);
  const std::vector<char> visible(2, 1);
  CHECK(connectivity_loss(soup, graph, visible, false) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("translation along the edge normal costs exactly the gap") {
  const double t = 0.37;
  TriangleSoup soup = two_connected_triangles(t, 0.0);
  const EdgeGraph graph = graph_for_pair(soup);
  const std::vector<char> visible(2, 1);
  CHECK(connectivity_loss(soup, graph, visible, false) == doctest::Approx(t).epsilon(1e-9));
}

TEST_CASE("gap plus dihedral fold matches a direct formula evaluation") {
  const double gap = 0.1, fold = 60.0;
  TriangleSoup soup = two_connected_triangles(gap, fold);
  const EdgeGraph graph = graph_for_pair(soup);
  const std::vector<char> visible(2, 1);

  // independent evaluation straight from the vertex positions
  const VertexLayout la = soup.vertex_layout(0);
  const VertexLayout lb = soup.vertex_layout(1);
  const Vec3 a0 = la.v[0], a1 = la.v[1];
  const Vec3 b0 = lb.v[0], b1 = lb.v[1];
  const double straight = (a0 - b0).norm() + (a1 - b1).norm();
  const double crossed = (a0 - b1).norm() + (a1 - b0).norm();
  const double dist_term = 0.5 * std::min(straight, crossed);
  const double normal_term = 1.0 - la.normal.dot(lb.normal);
  const double expected = dist_term + normal_term;

  CHECK(normal_term == doctest::Approx(1.0 - std::cos(fold * M_PI / 180.0)).epsilon(1e-9));
  CHECK(connectivity_loss(soup, graph, visible, false) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("connectivity loss is invariant under a global rigid transform") {
  Rng rng(71);
  TriangleSoup soup = two_connected_triangles(0.23, 35.0);
  const EdgeGraph graph = graph_for_pair(soup);
  const std::vector<char> visible(2, 1);
  const double before = connectivity_loss(soup, graph, visible, false);

  const Mat3 rot = random_rotation(rng);
  const Quat qrot(rot);
  const Vec3 t(1.3, -0.7, 2.2);
  TriangleSoup moved = soup;
  for (std::size_t i = 0; i < soup.count(); ++i) {
    const Vec3 mu(soup.mu.at(i)[0], soup.mu.at(i)[1], soup.mu.at(i)[2]);
    const Vec3 mu2 = rot * mu + t;
    for (int k = 0; k < 3; ++k) moved.mu.at(i)[k] = mu2[k];
    const Quat q(soup.quat.at(i)[0], soup.quat.at(i)[1], soup.quat.at(i)[2],
                 soup.quat.at(i)[3]);
    const Quat q2 = qrot * q;
    moved.quat.at(i)[0] = q2.w();
    moved.quat.at(i)[1] = q2.x();
    moved.quat.at(i)[2] = q2.y();
    moved.quat.at(i)[3] = q2.z();
  }
  // connections cache geometry; rebuild the refs for the moved soup
  EdgeGraph moved_graph = graph_for_pair(moved);
  const double after = connectivity_loss(moved, moved_graph, visible, false);
  CHECK(after == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("invisible source triangles contribute neither loss nor gradients") {
  TriangleSoup soup = two_connected_triangles(0.4, 25.0);
  const EdgeGraph graph = graph_for_pair(soup);
  std::vector<char> visible = {0, 1};  // the single connection sources from triangle 0
  soup.zero_grads();
  const double value = connectivity_loss(soup, graph, visible, true);
  CHECK(value == 0.0);
  for (const ParamArray* p : soup.params()) {
    for (const double g : p->grad) CHECK(g == 0.0);
  }
}

TEST_CASE("a visible source propagates gradients to an off-frustum partner") {
  TriangleSoup soup = two_connected_triangles(0.4, 25.0);
  const EdgeGraph graph = graph_for_pair(soup);
  std::vector<char> visible = {1, 0};  // source visible, partner not
  soup.zero_grads();
  const double value = connectivity_loss(soup, graph, visible, true);
  CHECK(value > 0.0);
  double partner_grad = 0.0;
  for (int k = 0; k < 3; ++k) partner_grad += std::abs(soup.mu.grad_at(1)[k]);
  CHECK(partner_grad > 0.0);
}

TEST_CASE("connectivity gradients match finite differences") {
  Rng rng(73);
  TriangleSoup soup = two_connected_triangles(0.3, 40.0);
  const EdgeGraph graph = graph_for_pair(soup);
  const std::vector<char> visible(2, 1);

  soup.zero_grads();
  connectivity_loss(soup, graph, visible, true);

  const auto value = [&]() {
    TriangleSoup& s = soup;
    return connectivity_loss(s, graph, visible, false);
  };

  const double h = 1e-6;
  for (std::size_t tri = 0; tri < 2; ++tri) {
    auto check_param = [&](ParamArray& arr) {
      for (int k = 0; k < arr.stride; ++k) {
        const std::size_t idx = tri * arr.stride + k;
        const double up = eval_perturbed(soup, arr, idx, h, value);
        const double dn = eval_perturbed(soup, arr, idx, -h, value);
        const double fd = (up - dn) / (2 * h);
        CHECK(rel_error(arr.grad[idx], fd, 1e-8) < 1e-4);
      }
    };
    check_param(soup.mu);
    check_param(soup.scale_raw);
    check_param(soup.quat);
  }
}

TEST_CASE("stale graphs are rejected") {
  TriangleSoup soup = two_connected_triangles(0.1, 0.0);
  EdgeGraph graph = graph_for_pair(soup);
  graph.soup_count = 5;
  const std::vector<char> visible(2, 1);
  CHECK_THROWS_AS(connectivity_loss(soup, graph, visible, false), ContractError);
}

TEST_CASE("total loss with zero weights is zero with zero gradients") {
  Rng rng(75);
  TriangleSoup soup = random_soup(rng, 5, 1);
  const Camera cam = loss_camera(24, 24);
  RenderOptions opt;
  opt.active_sh_degree = 1;
  const RenderOutput out = render(soup, cam, opt);
  const ImageD target = random_image(rng, 24, 24, 3);

  TrainConfig cfg;
  cfg.w_photo = cfg.w_normal = cfg.w_smooth = cfg.w_conn = 0.0;
  LossGrads grads;
  soup.zero_grads();
  const LossBreakdown res =
      evaluate_losses(soup, out, target, cam, cfg, 20000, nullptr, nullptr, &grads, true);
  CHECK(res.total == 0.0);
  for (const double g : grads.color.data) CHECK(g == 0.0);
  for (const double g : grads.depth.data) CHECK(g == 0.0);
  for (const double g : grads.normal.data) CHECK(g == 0.0);
}

TEST_CASE("only the photometric term is active before the schedule starts") {
  Rng rng(77);
  TriangleSoup soup = random_soup(rng, 5, 1);
  const Camera cam = loss_camera(24, 24);
  RenderOptions opt;
  opt.active_sh_degree = 1;
  const RenderOutput out = render(soup, cam, opt);
  const ImageD target = random_image(rng, 24, 24, 3);

  TrainConfig cfg;  // defaults: normal at 7000, smooth/conn at 10000
  LossGrads grads;
  const LossBreakdown at5000 =
      evaluate_losses(soup, out, target, cam, cfg, 5000, nullptr, nullptr, &grads, false);
  CHECK(at5000.normal == 0.0);
  CHECK(at5000.smooth == 0.0);
  CHECK(at5000.connectivity == 0.0);
  CHECK(at5000.photometric > 0.0);
  for (const double g : grads.depth.data) CHECK(g == 0.0);
  for (const double g : grads.normal.data) CHECK(g == 0.0);

  const LossBreakdown at8000 =
      evaluate_losses(soup, out, target, cam, cfg, 8000, nullptr, nullptr, nullptr, false);
  CHECK(at8000.smooth == 0.0);
  CHECK(at8000.connectivity == 0.0);
}

TEST_CASE("loss gradients scale linearly with their weights") {
  Rng rng(79);
  TriangleSoup soup = random_soup(rng, 8, 0);
  const Camera cam = loss_camera(24, 24);
  RenderOptions opt;
  opt.active_sh_degree = 0;
  const RenderOutput out = render(soup, cam, opt);
  const ImageD target = random_image(rng, 24, 24, 3);

  TrainConfig cfg;
  cfg.w_photo = 1.0;
  LossGrads g1, g2;
  evaluate_losses(soup, out, target, cam, cfg, 0, nullptr, nullptr, &g1, false);
  cfg.w_photo = 2.5;
  evaluate_losses(soup, out, target, cam, cfg, 0, nullptr, nullptr, &g2, false);
  for (std::size_t i = 0; i < g1.color.data.size(); ++i) {
    CHECK(g2.color.data[i] == doctest::Approx(2.5 * g1.color.data[i]).epsilon(1e-12));
  }
}
