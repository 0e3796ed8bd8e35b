#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "trisoup/connect/edge_graph.hpp"

using namespace trisoup;
using namespace trisoup::testutil;

namespace {

/// O(E^2) reference: same admission rules, same radius rule, same tie break.
EdgeGraph brute_force_graph(const TriangleSoup& soup, const GraphBuildParams& params) {
  EdgeGraph graph;
  graph.soup_count = soup.count();

  struct Entry {
    EdgeRef ref;
    double radius;
  };
  std::vector<Entry> edges;
  std::vector<VertexLayout> layouts(soup.count());
  for (std::size_t i = 0; i < soup.count(); ++i) {
    layouts[i] = soup.vertex_layout(i);
    if (layouts[i].degenerate) continue;
    const double r = params.search_radius_factor * soup.circumradius(i);
    for (int e = 0; e < 3; ++e) {
      edges.push_back({make_edge_ref(layouts[i], static_cast<std::int32_t>(i), e), r});
    }
  }

  for (const Entry& a : edges) {
    double best_d2 = std::numeric_limits<double>::infinity();
    const EdgeRef* best = nullptr;
    for (const Entry& b : edges) {
      if (b.ref.tri == a.ref.tri) continue;
      const double d2 = (b.ref.midpoint - a.ref.midpoint).squaredNorm();
      if (d2 > a.radius * a.radius) continue;
      if (d2 > best_d2) continue;
      if (d2 == best_d2 && best != nullptr &&
          (b.ref.tri > best->tri || (b.ref.tri == best->tri && b.ref.edge >= best->edge))) {
        continue;
      }
      if (!admissible(a.ref, b.ref, params.tau, params.rho, params.use_outward_vectors)) {
        continue;
      }
      best_d2 = d2;
      best = &b.ref;
    }
    if (best != nullptr) {
      EdgeConnection conn;
      conn.a = a.ref;
      conn.b = *best;
      const VertexLayout& la = layouts[a.ref.tri];
      const VertexLayout& lb = layouts[best->tri];
      const Vec3& a0 = la.v[a.ref.edge];
      const Vec3& a1 = la.v[(a.ref.edge + 1) % 3];
      const Vec3& b0 = lb.v[best->edge];
      const Vec3& b1 = lb.v[(best->edge + 1) % 3];
      conn.crossed = (a0 - b1).norm() + (a1 - b0).norm() < (a0 - b0).norm() + (a1 - b1).norm();
      graph.connections.push_back(conn);
    }
  }
  return graph;
}

bool graphs_equal(const EdgeGraph& a, const EdgeGraph& b) {
  if (a.connections.size() != b.connections.size()) return false;
  for (std::size_t i = 0; i < a.connections.size(); ++i) {
    const EdgeConnection& x = a.connections[i];
    const EdgeConnection& y = b.connections[i];
    if (x.a.tri != y.a.tri || x.a.edge != y.a.edge) return false;
    if (x.b.tri != y.b.tri || x.b.edge != y.b.edge) return false;
    if (x.crossed != y.crossed) return false;
  }
  return true;
}

/// Coplanar equilateral triangles laid out on a hex-like grid with small gaps.
TriangleSoup triangle_grid(int nx, int ny, double spacing, double scale) {
  TriangleSoup soup(static_cast<std::size_t>(nx) * ny, 0);
  std::size_t idx = 0;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x, ++idx) {
      soup.mu.at(idx)[0] = x * spacing;
      soup.mu.at(idx)[1] = y * spacing;
      soup.mu.at(idx)[2] = 0.0;
      for (int k = 0; k < 3; ++k) soup.scale_raw.at(idx)[k] = std::log(scale);
      // alternate upright and point-mirrored triangles
      if ((x + y) % 2 == 0) {
        soup.quat.at(idx)[0] = 1.0;
      } else {
        soup.quat.at(idx)[3] = 1.0;
      }
    }
  }
  return soup;
}

}  // namespace

TEST_CASE("edge refs: outward vectors are orthonormal to edge and normal") {
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    TriangleSoup soup = random_soup(rng, 1, 0);
    const VertexLayout lay = soup.vertex_layout(0);
    for (int e = 0; e < 3; ++e) {
      const EdgeRef ref = make_edge_ref(lay, 0, e);
      CHECK(std::abs(ref.outward.norm() - 1.0) < 1e-9);
      CHECK(std::abs(ref.outward.dot(ref.dir)) < 1e-9);
      CHECK(std::abs(ref.outward.dot(lay.normal)) < 1e-9);
      CHECK(ref.outward.dot(ref.midpoint - lay.barycenter) > 0.0);
    }
  }
}

TEST_CASE("admissibility of mirror-facing coplanar triangles") {
  // A at the origin, partner mirrored across edge 0 with a gap
  TriangleSoup soup(2, 0);
  soup.quat.at(0)[0] = 1.0;
  soup.quat.at(1)[3] = 1.0;  // 180 deg about z
  const auto& u = canonical_offsets();
  const VertexLayout la0 = soup.vertex_layout(0);
  const EdgeRef a = make_edge_ref(la0, 0, 0);
  const Vec3 mu_b = Vec3(u[0] + u[1]) + 0.2 * a.outward;
  for (int k = 0; k < 3; ++k) soup.mu.at(1)[k] = mu_b[k];

  const EdgeRef b = make_edge_ref(soup.vertex_layout(1), 1, 0);
  CHECK(a.outward.dot((b.midpoint - a.midpoint).normalized()) == doctest::Approx(1.0));
  CHECK(a.outward.dot(b.outward) == doctest::Approx(-1.0));
  CHECK(admissible(a, b, 0.0, 0.0));

  // neighbor directly behind: direction criterion fails
  const Vec3 mu_back = Vec3(u[0] + u[1]) - 3.0 * a.outward;
  for (int k = 0; k < 3; ++k) soup.mu.at(1)[k] = mu_back[k];
  const EdgeRef b_back = make_edge_ref(soup.vertex_layout(1), 1, 0);
  CHECK_FALSE(admissible(a, b_back, 0.0, 0.0));
}

TEST_CASE("parallel outward vectors fail the orientation criterion") {
  // two identical upright triangles, one shifted sideways: outwards align
  TriangleSoup soup(2, 0);
  soup.quat.at(0)[0] = 1.0;
  soup.quat.at(1)[0] = 1.0;
  soup.mu.at(1)[0] = 2.5;
  const EdgeRef a = make_edge_ref(soup.vertex_layout(0), 0, 0);
  const EdgeRef b = make_edge_ref(soup.vertex_layout(1), 1, 0);
  CHECK(a.outward.dot(b.outward) == doctest::Approx(1.0));
  CHECK_FALSE(admissible(a, b, 0.0, 0.0));
}

TEST_CASE("an isolated triangle builds an empty graph") {
  TriangleSoup soup(1, 0);
  soup.quat.at(0)[0] = 1.0;
  const EdgeGraph graph = build_graph(soup, {}, 0);
  CHECK(graph.connections.empty());
}

TEST_CASE("grid of coplanar triangles connects interior edges to their neighbors") {
  const TriangleSoup soup = triangle_grid(4, 4, 1.05, 0.5);
  GraphBuildParams params;
  const EdgeGraph got = build_graph(soup, params, 0);
  const EdgeGraph want = brute_force_graph(soup, params);
  CHECK(graphs_equal(got, want));
  CHECK(got.connections.size() > soup.count());  // most edges find a partner

  // every connection joins genuinely nearby, facing edges
  for (const EdgeConnection& conn : got.connections) {
    CHECK((conn.a.midpoint - conn.b.midpoint).norm() < 1.6);
    CHECK(conn.a.outward.dot(conn.b.outward) < 0.0);
  }
}

TEST_CASE("build_graph equals the brute-force oracle on random soups") {
  Rng rng(83);
  for (int trial = 0; trial < 8; ++trial) {
    TriangleSoup soup = random_soup(rng, 40 + trial * 20, 0, 1.5);
    GraphBuildParams params;
    params.tau = trial % 2 == 0 ? 0.0 : 0.1;
    params.rho = trial % 3 == 0 ? 0.0 : 0.05;
    params.use_outward_vectors = trial % 4 != 3;
    const EdgeGraph got = build_graph(soup, params, trial);
    const EdgeGraph want = brute_force_graph(soup, params);
    CHECK(graphs_equal(got, want));
  }
}

TEST_CASE("face-to-face stacked triangles match the oracle decisions") {
  TriangleSoup soup(2, 0);
  soup.quat.at(0)[0] = 1.0;
  soup.quat.at(1)[0] = 1.0;
  soup.mu.at(1)[2] = 0.05;  // stacked along the shared normal axis
  GraphBuildParams params;
  const EdgeGraph got = build_graph(soup, params, 0);
  const EdgeGraph want = brute_force_graph(soup, params);
  CHECK(graphs_equal(got, want));
  // same-pointing outward vectors: nothing admissible at tau = rho = 0
  CHECK(got.connections.empty());
}

TEST_CASE("graph build is deterministic") {
  Rng rng(85);
  TriangleSoup soup = random_soup(rng, 120, 0, 1.2);
  const EdgeGraph a = build_graph(soup, {}, 1);
  const EdgeGraph b = build_graph(soup, {}, 2);
  CHECK(graphs_equal(a, b));
}

TEST_CASE("pairing order minimizes summed endpoint distance") {
  Rng rng(87);
  TriangleSoup soup = random_soup(rng, 60, 0, 1.0);
  const EdgeGraph graph = build_graph(soup, {}, 0);
  for (const EdgeConnection& conn : graph.connections) {
    const VertexLayout la = soup.vertex_layout(conn.a.tri);
    const VertexLayout lb = soup.vertex_layout(conn.b.tri);
    const Vec3& a0 = la.v[conn.a.edge];
    const Vec3& a1 = la.v[(conn.a.edge + 1) % 3];
    const Vec3& b0 = lb.v[conn.b.edge];
    const Vec3& b1 = lb.v[(conn.b.edge + 1) % 3];
    const double straight = (a0 - b0).norm() + (a1 - b1).norm();
    const double crossed = (a0 - b1).norm() + (a1 - b0).norm();
    const double chosen = conn.crossed ? crossed : straight;
    CHECK(chosen <= std::min(straight, crossed) + 1e-12);
  }
}
