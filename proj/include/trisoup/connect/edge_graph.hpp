#pragma once

#include <cstdint>
#include <vector>

#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// One directed triangle edge. Edge k of a triangle joins vertex k to vertex
/// (k+1) mod 3; `outward` is the in-plane unit vector orthogonal to the edge
/// and the triangle normal, pointing away from the triangle.
struct EdgeRef {
  std::int32_t tri = -1;
  std::int8_t edge = -1;
  Vec3 midpoint = Vec3::Zero();
  Vec3 outward = Vec3::Zero();
  Vec3 dir = Vec3::Zero();  // unit edge direction, vertex k to k+1
};

EdgeRef make_edge_ref(const VertexLayout& lay, std::int32_t tri, int edge);

/// Admission test for connecting edge a to edge b.
/// Direction: the neighbor midpoint lies on a's outward side.
/// Orientation: the two outward vectors face each other.
/// With use_outward_vectors = false the criteria use the raw edge direction
/// vectors instead (the looser reading; kept for comparison).
bool admissible(const EdgeRef& a, const EdgeRef& b, double tau, double rho,
                bool use_outward_vectors = true);

struct EdgeConnection {
  EdgeRef a;
  EdgeRef b;
  bool crossed = false;  // endpoint pairing: false pairs (a0,b0)(a1,b1), true swaps b
};

struct EdgeGraph {
  std::vector<EdgeConnection> connections;
  std::size_t soup_count = 0;  // stamp: triangle count at build time
  std::int64_t build_iteration = -1;

  bool stale_for(const TriangleSoup& soup) const { return soup_count != soup.count(); }
};

struct GraphBuildParams {
  double tau = 0.0;
  double rho = 0.0;
  double search_radius_factor = 3.0;
  bool use_outward_vectors = true;
};

/// Connects every edge to its nearest admissible foreign edge within
/// search_radius_factor times the owning triangle's circumradius. Distance
/// ties break on the lowest (tri, edge) index; the result is deterministic.
EdgeGraph build_graph(const TriangleSoup& soup, const GraphBuildParams& params,
                      std::int64_t iteration);

}  // namespace trisoup
