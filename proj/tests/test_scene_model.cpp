#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "trisoup/core/config.hpp"
#include "trisoup/core/error.hpp"
#include "trisoup/scene/triangle_soup.hpp"

using namespace trisoup;
using namespace trisoup::testutil;

TEST_CASE("canonical offsets sum to zero and edge V2V0 runs along +x") {
  const auto& u = canonical_offsets();
  CHECK((u[0] + u[1] + u[2]).norm() == doctest::Approx(0.0).epsilon(1e-15));
  for (const auto& v : u) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
  const Vec3 edge = u[0] - u[2];
  CHECK(edge[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(edge[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(edge[0] > 0.0);
}

TEST_CASE("activations at neutral raw values") {
  TriangleSoup soup(1, 0);
  soup.quat.at(0)[0] = 1.0;
  const ActivatedTriangle a = soup.activate(0);
  CHECK(a.alpha == doctest::Approx(0.5));
  CHECK(a.scale[0] == doctest::Approx(1.0));
  CHECK(a.sigma == doctest::Approx(1.0));
  CHECK((a.rot - Mat3::Identity()).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("identity layout sits on the canonical offsets with barycenter at mu") {
  TriangleSoup soup(1, 0);
  soup.quat.at(0)[0] = 1.0;
  soup.mu.at(0)[0] = 0.3;
  soup.mu.at(0)[1] = -0.2;
  soup.mu.at(0)[2] = 1.1;
  const VertexLayout lay = soup.vertex_layout(0);
  const Vec3 mu(0.3, -0.2, 1.1);
  const auto& u = canonical_offsets();
  for (int j = 0; j < 3; ++j) {
    CHECK((lay.v[j] - (mu + u[j])).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
  CHECK((lay.barycenter - mu).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("uniform scaling doubles vertex offsets and quadruples area") {
  TriangleSoup soup(1, 0);
  soup.quat.at(0)[0] = 1.0;
  const double area1 = soup.vertex_layout(0).area;
  for (int k = 0; k < 3; ++k) soup.scale_raw.at(0)[k] = std::log(2.0);
  const VertexLayout lay = soup.vertex_layout(0);
  const auto& u = canonical_offsets();
  for (int j = 0; j < 3; ++j) {
    CHECK((lay.v[j] - 2.0 * u[j]).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(lay.area == doctest::Approx(4.0 * area1).epsilon(1e-12));
}

TEST_CASE("random layouts are planar with normal orthogonal to every edge") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    TriangleSoup soup = random_soup(rng, 1, 0);
    const VertexLayout lay = soup.vertex_layout(0);
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(lay.normal.dot(lay.v[j] - lay.barycenter)) < 1e-12);
      const Vec3 edge = lay.v[(j + 1) % 3] - lay.v[j];
      CHECK(std::abs(lay.normal.dot(edge)) < 1e-12 * std::max(1.0, edge.norm()));
    }
  }
}

TEST_CASE("refit from layout reproduces the vertex positions") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    TriangleSoup soup = random_soup(rng, 1, 0);
    const VertexLayout lay = soup.vertex_layout(0);
    const Vec3 mu(soup.mu.at(0)[0], soup.mu.at(0)[1], soup.mu.at(0)[2]);

    // s from vertex distances, R from the mapped canonical frame
    const auto& u = canonical_offsets();
    Vec3 s;
    for (int j = 0; j < 3; ++j) s[j] = (lay.v[j] - mu).norm();
    const Vec3 a0 = (lay.v[0] - mu) / s[0];
    const Vec3 a1 = (lay.v[1] - mu) / s[1];
    Mat3 from, to;
    from.col(0) = u[0];
    from.col(1) = u[1];
    from.col(2) = u[0].cross(u[1]);
    to.col(0) = a0;
    to.col(1) = a1;
    to.col(2) = a0.cross(a1);
    const Mat3 rot = to * from.inverse();

    const VertexLayout refit = TriangleSoup::layout_from(mu, rot, s);
    for (int j = 0; j < 3; ++j) {
      CHECK((refit.v[j] - lay.v[j]).norm() < 1e-9);
    }
  }
}

TEST_CASE("init from four tetrahedron corners") {
  SparseSeed seed;
  seed.points = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  seed.colors = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0.5, 0.5, 0.5)};
  TrainConfig cfg;
  const TriangleSoup soup = init_from_points(seed, cfg, 7);

  CHECK(soup.count() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const ActivatedTriangle a = soup.activate(i);
    CHECK(a.alpha == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(a.quat.norm() - 1.0) < 1e-9);

    // equilateral within 1e-9: all pairwise edge lengths equal
    const VertexLayout lay = soup.vertex_layout(i);
    const double e01 = (lay.v[1] - lay.v[0]).norm();
    const double e12 = (lay.v[2] - lay.v[1]).norm();
    const double e20 = (lay.v[0] - lay.v[2]).norm();
    CHECK(std::abs(e01 - e12) < 1e-9);
    CHECK(std::abs(e12 - e20) < 1e-9);
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(lay.normal.dot(lay.v[j] - lay.barycenter)) < 1e-9);
    }
  }
}

TEST_CASE("init circumradius equals mean 3-nearest-neighbor distance") {
  // neighbors of the origin point at distances exactly 1, 2, 3
  SparseSeed seed;
  seed.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 3)};
  seed.colors.assign(4, Vec3(0.5, 0.5, 0.5));
  TrainConfig cfg;
  const TriangleSoup soup = init_from_points(seed, cfg, 3);

  // brute-force oracle for the expected mean
  double dists[3] = {(seed.points[1] - seed.points[0]).norm(),
                     (seed.points[2] - seed.points[0]).norm(),
                     (seed.points[3] - seed.points[0]).norm()};
  const double expected = (dists[0] + dists[1] + dists[2]) / 3.0;
  CHECK(expected == doctest::Approx(2.0));
  CHECK(soup.circumradius(0) == doctest::Approx(expected).epsilon(1e-9));

  // sigma init: falloff width 4/sigma = fraction * mean distance
  const ActivatedTriangle a = soup.activate(0);
  CHECK(4.0 / a.sigma == doctest::Approx(cfg.sigma_init_fraction * expected).epsilon(1e-12));
}

TEST_CASE("init DC color reproduces the seed color through SH eval") {
  SparseSeed seed;
  seed.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  seed.colors = {Vec3(0.8, 0.1, 0.3), Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(0.2, 0.9, 0.4)};
  TrainConfig cfg;
  const TriangleSoup soup = init_from_points(seed, cfg, 1);
  constexpr double kC0 = 0.28209479177387814;
  for (int c = 0; c < 3; ++c) {
    const double dc = soup.sh_vertex(0, 0)[c];
    CHECK(0.5 + dc * kC0 == doctest::Approx(seed.colors[0][c]).epsilon(1e-12));
  }
}

TEST_CASE("init is deterministic for a fixed seed") {
  SparseSeed seed;
  Rng rng(5);
  for (int i = 0; i < 32; ++i) {
    seed.points.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    seed.colors.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
  }
  TrainConfig cfg;
  const TriangleSoup a = init_from_points(seed, cfg, 42);
  const TriangleSoup b = init_from_points(seed, cfg, 42);
  const TriangleSoup c = init_from_points(seed, cfg, 43);
  CHECK(a.count() == seed.points.size());
  REQUIRE(a.quat.value.size() == b.quat.value.size());
  for (std::size_t i = 0; i < a.quat.value.size(); ++i) {
    CHECK(a.quat.value[i] == b.quat.value[i]);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.quat.value.size(); ++i) {
    any_diff = any_diff || a.quat.value[i] != c.quat.value[i];
  }
  CHECK(any_diff);
}

TEST_CASE("init rejects tiny or invalid seeds") {
  TrainConfig cfg;
  SparseSeed seed;
  seed.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  seed.colors.assign(3, Vec3(0.5, 0.5, 0.5));
  CHECK_THROWS_AS(init_from_points(seed, cfg, 0), ValidationError);

  seed.points.push_back(Vec3(std::nan(""), 0, 0));
  seed.colors.push_back(Vec3(0.5, 0.5, 0.5));
  CHECK_THROWS_AS(init_from_points(seed, cfg, 0), ValidationError);
}

TEST_CASE("vertex gradients match finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    TriangleSoup soup = random_soup(rng, 1, 0);
    // random linear probe of the vertex positions
    std::array<Vec3, 3> probe;
    for (auto& p : probe) p = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));

    const auto loss = [&]() {
      const VertexLayout lay = soup.vertex_layout(0);
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += probe[j].dot(lay.v[j]);
      return acc;
    };

    soup.zero_grads();
    soup.accumulate_vertex_grads(0, probe);

    const double h = 1e-6;
    auto check_param = [&](ParamArray& arr, int stride) {
      for (int k = 0; k < stride; ++k) {
        const double fd = (eval_perturbed(soup, arr, k, h, loss) -
                           eval_perturbed(soup, arr, k, -h, loss)) /
                          (2.0 * h);
        const double analytic = arr.grad[k];
        CHECK(rel_error(analytic, fd, 1e-8) < 1e-5);
      }
    };
    check_param(soup.mu, 3);
    check_param(soup.scale_raw, 3);
    check_param(soup.quat, 4);
  }
}

TEST_CASE("quaternion renormalization restores unit length") {
  TriangleSoup soup(2, 0);
  soup.quat.at(0)[0] = 3.0;
  soup.quat.at(0)[2] = 4.0;
  soup.quat.at(1)[1] = -2.0;
  soup.renormalize_quaternions();
  for (std::size_t i = 0; i < 2; ++i) {
    const double* q = soup.quat.at(i);
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    CHECK(std::abs(n - 1.0) < 1e-9);
  }
}

TEST_CASE("degenerate triangles are flagged") {
  TriangleSoup soup(1, 0);
  soup.quat.at(0)[0] = 1.0;
  for (int k = 0; k < 3; ++k) soup.scale_raw.at(0)[k] = std::log(1e-8);
  const VertexLayout lay = soup.vertex_layout(0);
  CHECK(lay.degenerate);
}
