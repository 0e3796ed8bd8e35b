#include "trisoup/density/density_control.hpp"

#include <cmath>

#include "trisoup/core/error.hpp"

namespace trisoup {

void accumulate_stats(DensifyStats& stats, const TriangleSoup& soup,
                      const std::vector<double>& screen_extent) {
  TRISOUP_CHECK(stats.size() == soup.count(), "accumulate_stats: stats length mismatch");
  TRISOUP_CHECK(screen_extent.size() == soup.count(),
                "accumulate_stats: screen extent length mismatch");
  for (std::size_t i = 0; i < soup.count(); ++i) {
    const double* g = soup.mu.grad_at(i);
    const Vec3 grad(g[0], g[1], g[2]);
    const double norm = grad.norm();
    if (norm > stats.max_grad_mu[i]) {
      stats.max_grad_mu[i] = norm;
      stats.grad_dir[i] = norm > 0.0 ? Vec3(grad / norm) : Vec3::Zero();
    }
    stats.max_screen_extent[i] = std::max(stats.max_screen_extent[i], screen_extent[i]);
  }
}

namespace {

void copy_scalars(const ParamArray& src, std::size_t si, ParamArray& dst, std::size_t di,
                  bool with_moments) {
  const int stride = src.stride;
  for (int k = 0; k < stride; ++k) {
    dst.value[di * stride + k] = src.value[si * stride + k];
    if (with_moments) {
      dst.m1[di * stride + k] = src.m1[si * stride + k];
      dst.m2[di * stride + k] = src.m2[si * stride + k];
    }
  }
}

void copy_triangle(const TriangleSoup& src, std::size_t si, TriangleSoup& dst, std::size_t di,
                   bool with_moments) {
  copy_scalars(src.mu, si, dst.mu, di, with_moments);
  copy_scalars(src.sh, si, dst.sh, di, with_moments);
  copy_scalars(src.scale_raw, si, dst.scale_raw, di, with_moments);
  copy_scalars(src.quat, si, dst.quat, di, with_moments);
  copy_scalars(src.opacity_raw, si, dst.opacity_raw, di, with_moments);
  copy_scalars(src.sigma_raw, si, dst.sigma_raw, di, with_moments);
}

void average_sh_blocks(const double* a, const double* b, double* out, int block) {
  for (int k = 0; k < block; ++k) out[k] = 0.5 * (a[k] + b[k]);
}

}  // namespace

DensifyReport densify_and_prune(TriangleSoup& soup, DensifyStats& stats,
                                const TrainConfig& cfg, double split_size_threshold) {
  TRISOUP_CHECK(stats.size() == soup.count(), "densify_and_prune: stats length mismatch");
  const std::size_t n = soup.count();
  DensifyReport report;

  enum class Action { kKeep, kPrune, kSplit, kClone };
  std::vector<Action> action(n, Action::kKeep);
  std::vector<double> circumradius(n, 0.0);

  std::int64_t budget = cfg.max_triangles - static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ActivatedTriangle act = soup.activate(i);
    const VertexLayout lay = soup.vertex_layout(i);
    circumradius[i] = soup.circumradius(i);
    if (act.alpha < cfg.prune_opacity || lay.degenerate) {
      action[i] = Action::kPrune;
      ++report.pruned;
      continue;
    }
    if (stats.max_grad_mu[i] > cfg.densify_grad_threshold) {
      if (circumradius[i] > split_size_threshold) {
        if (budget >= 3) {
          action[i] = Action::kSplit;
          ++report.split;
          budget -= 3;
        }
      } else if (budget >= 1) {
        action[i] = Action::kClone;
        ++report.cloned;
        budget -= 1;
      }
    }
  }

  const std::size_t new_count = n - report.pruned + 3 * report.split + report.cloned;
  TriangleSoup next(new_count, soup.sh_degree());
  const int sh_block = soup.sh_coeffs() * 3;  // one vertex block

  std::size_t cursor = 0;
  std::vector<std::size_t> clone_sources;
  for (std::size_t i = 0; i < n; ++i) {
    switch (action[i]) {
      case Action::kPrune:
        break;
      case Action::kKeep:
        copy_triangle(soup, i, next, cursor++, true);
        break;
      case Action::kClone:
        copy_triangle(soup, i, next, cursor++, true);
        clone_sources.push_back(i);
        break;
      case Action::kSplit: {
        const ActivatedTriangle act = soup.activate(i);
        const VertexLayout lay = soup.vertex_layout(i);
        const Vec3 mu_p(soup.mu.at(i)[0], soup.mu.at(i)[1], soup.mu.at(i)[2]);
        const Quat q_p(act.quat[0], act.quat[1], act.quat[2], act.quat[3]);
        const double ln2 = std::log(2.0);

        // three corner children: half scale about each parent vertex
        for (int corner = 0; corner < 3; ++corner) {
          const std::size_t child = cursor++;
          copy_triangle(soup, i, next, child, false);
          const Vec3 mu_c = 0.5 * (mu_p + lay.v[corner]);
          for (int k = 0; k < 3; ++k) {
            next.mu.at(child)[k] = mu_c[k];
            next.scale_raw.at(child)[k] = soup.scale_raw.at(i)[k] - ln2;
          }
          // vertex `corner` keeps the parent coefficients, the other two
          // vertices sit at edge midpoints and average the adjacent corners
          for (int v = 0; v < 3; ++v) {
            double* dst = next.sh.at(child) + v * sh_block;
            if (v == corner) continue;  // already copied
            average_sh_blocks(soup.sh_vertex(i, corner), soup.sh_vertex(i, v), dst, sh_block);
          }
        }

        // center child: the medial triangle, half scale, flipped in-plane
        {
          const std::size_t child = cursor++;
          copy_triangle(soup, i, next, child, false);
          const Vec3 mu_c = 0.5 * (lay.v[0] + lay.v[1] + lay.v[2]) - 0.5 * mu_p;
          const Quat q_c = q_p * Quat(0.0, 0.0, 0.0, 1.0);
          next.quat.at(child)[0] = q_c.w();
          next.quat.at(child)[1] = q_c.x();
          next.quat.at(child)[2] = q_c.y();
          next.quat.at(child)[3] = q_c.z();
          for (int k = 0; k < 3; ++k) {
            next.mu.at(child)[k] = mu_c[k];
            next.scale_raw.at(child)[k] = soup.scale_raw.at(i)[k] - ln2;
          }
          // vertex j lands on the midpoint of the parent edge (j+1, j+2)
          for (int v = 0; v < 3; ++v) {
            double* dst = next.sh.at(child) + v * sh_block;
            average_sh_blocks(soup.sh_vertex(i, (v + 1) % 3), soup.sh_vertex(i, (v + 2) % 3),
                              dst, sh_block);
          }
        }
        break;
      }
    }
  }

  // clone copies go to the end, nudged toward the accumulated gradient
  for (const std::size_t src : clone_sources) {
    const std::size_t child = cursor++;
    copy_triangle(soup, src, next, child, true);
    const Vec3 jitter = cfg.clone_jitter_factor * circumradius[src] * stats.grad_dir[src];
    for (int k = 0; k < 3; ++k) next.mu.at(child)[k] += jitter[k];
  }
  TRISOUP_CHECK(cursor == new_count, "densify_and_prune: emission count mismatch");

  soup = std::move(next);
  stats.reset(new_count);
  report.count_after = new_count;
  return report;
}

void reset_opacity(TriangleSoup& soup, const TrainConfig& cfg) {
  const double raw_target = logit(cfg.opacity_reset_value);
  for (std::size_t i = 0; i < soup.count(); ++i) {
    double& raw = soup.opacity_raw.value[i];
    raw = cfg.opacity_reset_exact ? raw_target : std::min(raw, raw_target);
    soup.opacity_raw.m1[i] = 0.0;
    soup.opacity_raw.m2[i] = 0.0;
  }
}

}  // namespace trisoup
