#include <cmath>

#include "trisoup/core/error.hpp"
#include "trisoup/loss/losses.hpp"

namespace trisoup {

namespace {

// accumulates dL/d(unit normal) into vertex gradients of one triangle
void normal_backward(const VertexLayout& lay, const Vec3& g_nhat, std::array<Vec3, 3>& gv) {
  const double len = lay.normal_raw.norm();
  if (len < 1e-15) return;
  const Vec3 g_raw = (g_nhat - lay.normal * lay.normal.dot(g_nhat)) / len;
  const Vec3 e1 = lay.v[1] - lay.v[0];
  const Vec3 e2 = lay.v[2] - lay.v[0];
  // normal_raw = e2 x e1
  const Vec3 g_e2 = e1.cross(g_raw);
  const Vec3 g_e1 = g_raw.cross(e2);
  gv[1] += g_e1;
  gv[2] += g_e2;
  gv[0] -= g_e1 + g_e2;
}

}  // namespace

double connectivity_loss(TriangleSoup& soup, const EdgeGraph& graph,
                         const std::vector<char>& visible, bool accumulate_grads,
                         double grad_scale) {
  if (graph.stale_for(soup)) {
    throw ContractError("connectivity_loss: edge graph is stale (triangle count changed)");
  }
  TRISOUP_CHECK(visible.size() == soup.count(),
                "connectivity_loss: visibility mask size mismatch");

  double total = 0.0;
  for (const EdgeConnection& conn : graph.connections) {
    const std::int32_t ta = conn.a.tri;
    const std::int32_t tb = conn.b.tri;
    if (ta < 0 || tb < 0) continue;
    if (static_cast<std::size_t>(ta) >= soup.count() ||
        static_cast<std::size_t>(tb) >= soup.count()) {
      continue;  // partner pruned; skipped until the next rebuild
    }
    if (!visible[ta]) continue;

    const VertexLayout la = soup.vertex_layout(ta);
    const VertexLayout lb = soup.vertex_layout(tb);
    if (la.degenerate || lb.degenerate) continue;

    const int a0 = conn.a.edge, a1 = (conn.a.edge + 1) % 3;
    int b0 = conn.b.edge, b1 = (conn.b.edge + 1) % 3;
    if (conn.crossed) std::swap(b0, b1);

    const Vec3 diff0 = la.v[a0] - lb.v[b0];
    const Vec3 diff1 = la.v[a1] - lb.v[b1];
    const double len0 = diff0.norm();
    const double len1 = diff1.norm();
    const double normal_term = 1.0 - la.normal.dot(lb.normal);
    total += 0.5 * (len0 + len1) + normal_term;

    if (!accumulate_grads) continue;

    std::array<Vec3, 3> gva = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<Vec3, 3> gvb = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    if (len0 > 1e-12) {
      const Vec3 g = (0.5 * grad_scale / len0) * diff0;
      gva[a0] += g;
      gvb[b0] -= g;
    }
    if (len1 > 1e-12) {
      const Vec3 g = (0.5 * grad_scale / len1) * diff1;
      gva[a1] += g;
      gvb[b1] -= g;
    }
    normal_backward(la, -grad_scale * lb.normal, gva);
    normal_backward(lb, -grad_scale * la.normal, gvb);

    soup.accumulate_vertex_grads(ta, gva);
    soup.accumulate_vertex_grads(tb, gvb);
  }
  return total;
}

LossSchedule loss_schedule(const TrainConfig& cfg, std::int64_t iteration) {
  LossSchedule s;
  s.normal_active = cfg.w_normal > 0.0 && iteration >= cfg.normal_loss_start;
  s.smooth_active = cfg.w_smooth > 0.0 && iteration >= cfg.smooth_loss_start;
  s.conn_active = cfg.w_conn > 0.0 && iteration >= cfg.conn_loss_start;
  return s;
}

}  // namespace trisoup
