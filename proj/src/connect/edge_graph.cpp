#include "trisoup/connect/edge_graph.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace trisoup {

EdgeRef make_edge_ref(const VertexLayout& lay, std::int32_t tri, int edge) {
  EdgeRef ref;
  ref.tri = tri;
  ref.edge = static_cast<std::int8_t>(edge);
  const Vec3& a = lay.v[edge];
  const Vec3& b = lay.v[(edge + 1) % 3];
  ref.midpoint = 0.5 * (a + b);
  ref.dir = (b - a).normalized();
  Vec3 outward = lay.normal.cross(ref.dir);
  if (outward.dot(ref.midpoint - lay.barycenter) < 0.0) outward = -outward;
  ref.outward = outward;
  return ref;
}

bool admissible(const EdgeRef& a, const EdgeRef& b, double tau, double rho,
                bool use_outward_vectors) {
  const Vec3 connect = b.midpoint - a.midpoint;
  const double len = connect.norm();
  if (!(len > 0.0)) return false;
  const Vec3 g = connect / len;
  if (use_outward_vectors) {
    return a.outward.dot(g) > tau && a.outward.dot(b.outward) < -rho;
  }
  // literal reading: criteria on the edge direction vectors themselves
  return a.dir.dot(g) > tau && a.dir.dot(b.dir) < -rho;
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = std::hash<std::int64_t>()(k.x) * 73856093u;
    h ^= std::hash<std::int64_t>()(k.y) * 19349663u;
    h ^= std::hash<std::int64_t>()(k.z) * 83492791u;
    return h;
  }
};

CellKey cell_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p[0] / cell)),
          static_cast<std::int64_t>(std::floor(p[1] / cell)),
          static_cast<std::int64_t>(std::floor(p[2] / cell))};
}

bool pairing_crossed(const VertexLayout& la, int ea, const VertexLayout& lb, int eb) {
  const Vec3& a0 = la.v[ea];
  const Vec3& a1 = la.v[(ea + 1) % 3];
  const Vec3& b0 = lb.v[eb];
  const Vec3& b1 = lb.v[(eb + 1) % 3];
  const double straight = (a0 - b0).norm() + (a1 - b1).norm();
  const double crossed = (a0 - b1).norm() + (a1 - b0).norm();
  return crossed < straight;
}

}  // namespace

EdgeGraph build_graph(const TriangleSoup& soup, const GraphBuildParams& params,
                      std::int64_t iteration) {
  EdgeGraph graph;
  graph.soup_count = soup.count();
  graph.build_iteration = iteration;

  std::vector<VertexLayout> layouts(soup.count());
  std::vector<char> live(soup.count(), 0);
  std::vector<double> radius(soup.count(), 0.0);
  std::vector<EdgeRef> edges;
  edges.reserve(soup.count() * 3);
  double max_radius = 0.0;
  for (std::size_t i = 0; i < soup.count(); ++i) {
    layouts[i] = soup.vertex_layout(i);
    if (layouts[i].degenerate) continue;
    live[i] = 1;
    radius[i] = params.search_radius_factor * soup.circumradius(i);
    max_radius = std::max(max_radius, radius[i]);
    for (int e = 0; e < 3; ++e) {
      edges.push_back(make_edge_ref(layouts[i], static_cast<std::int32_t>(i), e));
    }
  }
  if (edges.empty()) return graph;

  const double cell = std::max(max_radius, 1e-9);
  std::unordered_map<CellKey, std::vector<std::int32_t>, CellHash> grid;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    grid[cell_of(edges[k].midpoint, cell)].push_back(static_cast<std::int32_t>(k));
  }

  for (const EdgeRef& a : edges) {
    const double r = radius[a.tri];
    if (!(r > 0.0)) continue;
    const double r2 = r * r;

    double best_d2 = std::numeric_limits<double>::infinity();
    const EdgeRef* best = nullptr;

    const CellKey lo = cell_of(a.midpoint - Vec3(r, r, r), cell);
    const CellKey hi = cell_of(a.midpoint + Vec3(r, r, r), cell);
    for (std::int64_t cz = lo.z; cz <= hi.z; ++cz) {
      for (std::int64_t cy = lo.y; cy <= hi.y; ++cy) {
        for (std::int64_t cx = lo.x; cx <= hi.x; ++cx) {
          const auto it = grid.find(CellKey{cx, cy, cz});
          if (it == grid.end()) continue;
          for (const std::int32_t idx : it->second) {
            const EdgeRef& b = edges[idx];
            if (b.tri == a.tri) continue;
            const double d2 = (b.midpoint - a.midpoint).squaredNorm();
            if (d2 > r2) continue;
            if (d2 > best_d2) continue;
            if (d2 == best_d2 && best != nullptr) {
              if (b.tri > best->tri || (b.tri == best->tri && b.edge >= best->edge)) continue;
            }
            if (!admissible(a, b, params.tau, params.rho, params.use_outward_vectors)) {
              continue;
            }
            best_d2 = d2;
            best = &b;
          }
        }
      }
    }

    if (best != nullptr) {
      EdgeConnection conn;
      conn.a = a;
      conn.b = *best;
      conn.crossed = pairing_crossed(layouts[a.tri], a.edge, layouts[best->tri], best->edge);
      graph.connections.push_back(conn);
    }
  }
  return graph;
}

}  // namespace trisoup
