#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>

#include "trisoup/core/parallel.hpp"
#include "trisoup/render/rasterizer.hpp"

namespace trisoup {

namespace {

std::vector<TriRenderData> build_tri_data(const TriangleSoup& soup, const Camera& cam,
                                          const RenderOptions& opt, const TileBinning& bin) {
  std::vector<TriRenderData> data(soup.count());
  std::vector<char> needed(soup.count(), 0);
  for (const auto& tile : bin.tiles)
    for (const std::int32_t id : tile) needed[id] = 1;

  const Vec3 cam_center = cam.center();
  parallel_for(static_cast<int>(soup.count()), [&](int i) {
    if (!needed[i]) return;
    TriRenderData& d = data[i];
    const ActivatedTriangle act = soup.activate(i);
    d.lay = TriangleSoup::layout_from(
        Vec3(soup.mu.at(i)[0], soup.mu.at(i)[1], soup.mu.at(i)[2]), act.rot, act.scale);
    if (d.lay.degenerate) return;
    d.alpha = act.alpha;
    d.sigma = act.sigma;
    for (int v = 0; v < 3; ++v) {
      const Vec3 anchor = opt.per_vertex_view_dirs
                              ? d.lay.v[v]
                              : Vec3(soup.mu.at(i)[0], soup.mu.at(i)[1], soup.mu.at(i)[2]);
      const Vec3 rel = anchor - cam_center;
      const double n = rel.norm();
      d.view_dir[v] = n > 0.0 ? Vec3(rel / n) : Vec3(0, 0, 1);
      d.color[v] = eval_sh_vertex(soup.sh_vertex(i, v), opt.active_sh_degree, d.view_dir[v]);
      if (!opt.per_vertex_view_dirs && v > 0) {
        d.view_dir[v] = d.view_dir[0];
        d.color[v] = eval_sh_vertex(soup.sh_vertex(i, v), opt.active_sh_degree, d.view_dir[0]);
      }
    }
    d.active = true;
  });
  return data;
}

struct TileSpan {
  int x0, y0, x1, y1;  // pixel bounds, inclusive
};

TileSpan tile_span(const TileBinning& bin, int tile, int width, int height) {
  const int tx = tile % bin.tiles_x;
  const int ty = tile / bin.tiles_x;
  TileSpan s;
  s.x0 = tx * bin.tile_size;
  s.y0 = ty * bin.tile_size;
  s.x1 = std::min(width - 1, s.x0 + bin.tile_size - 1);
  s.y1 = std::min(height - 1, s.y0 + bin.tile_size - 1);
  return s;
}

}  // namespace

RenderOutput render(const TriangleSoup& soup, const Camera& cam, const RenderOptions& opt_in) {
  RenderOptions opt = opt_in;
  opt.active_sh_degree = std::min(opt.active_sh_degree, soup.sh_degree());
  RenderOutput out;
  out.width = cam.width;
  out.height = cam.height;
  out.mode = opt.depth_mode;
  out.color = ImageD(cam.width, cam.height, 3);
  out.depth = ImageD(cam.width, cam.height, 1);
  out.normal = ImageD(cam.width, cam.height, 3);
  out.transmittance = ImageD(cam.width, cam.height, 1, 1.0);
  const std::size_t num_px = static_cast<std::size_t>(cam.width) * cam.height;
  out.median_index.assign(num_px, -1);
  out.weight_sum.assign(num_px, 0.0);
  out.contrib_start.assign(num_px, 0);
  out.contrib_count.assign(num_px, 0);

  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = opt.background[c];

  out.binning = tile_bin(soup, cam, opt);
  out.tri_data = build_tri_data(soup, cam, opt, out.binning);

  const int num_tiles = out.binning.tile_count();
  std::vector<std::vector<PixelContrib>> tile_contribs(num_tiles);
  std::vector<std::vector<std::uint32_t>> tile_counts(num_tiles);

  parallel_for(num_tiles, [&](int tile) {
    const auto& tris = out.binning.tiles[tile];
    const TileSpan span = tile_span(out.binning, tile, cam.width, cam.height);
    auto& contribs = tile_contribs[tile];
    auto& counts = tile_counts[tile];
    counts.assign(static_cast<std::size_t>(span.x1 - span.x0 + 1) * (span.y1 - span.y0 + 1),
                  0);
    if (tris.empty()) return;

    std::vector<PixelContrib> hits;
    std::size_t pixel_slot = 0;
    for (int y = span.y0; y <= span.y1; ++y) {
      for (int x = span.x0; x <= span.x1; ++x, ++pixel_slot) {
        const Ray ray = cam.pixel_ray(x, y);
        hits.clear();
        for (const std::int32_t id : tris) {
          const TriRenderData& d = out.tri_data[id];
          if (!d.active) continue;
          const Intersection isect = intersect(ray, d.lay, opt.near_plane);
          if (!isect.valid) continue;
          const double w_sigma = diffuse_weight(isect.edge_dist, d.sigma).w;
          if (d.alpha * w_sigma < kMinAlphaContrib) continue;
          PixelContrib pc;
          pc.tri = id;
          pc.depth = isect.depth;
          pc.lambda = isect.lambda;
          pc.edge_dist = isect.edge_dist;
          pc.w_sigma = w_sigma;
          pc.nearest_edge = static_cast<std::int8_t>(isect.nearest_edge);
          pc.corner_vertex = static_cast<std::int8_t>(isect.corner_vertex);
          hits.push_back(pc);
        }
        std::sort(hits.begin(), hits.end(), [](const PixelContrib& a, const PixelContrib& b) {
          if (a.depth != b.depth) return a.depth < b.depth;
          return a.tri < b.tri;
        });

        Vec3 color = Vec3::Zero();
        Vec3 normal = Vec3::Zero();
        double T = 1.0;
        double weight_sum = 0.0;
        double weighted_depth = 0.0;
        double median_depth = 0.0;
        std::int32_t median = -1;
        std::uint32_t blended = 0;
        for (const PixelContrib& pc : hits) {
          const TriRenderData& d = out.tri_data[pc.tri];
          const double alpha_eff = d.alpha * pc.w_sigma;
          const double blend_opacity = opt.transmittance_uses_diffuse ? alpha_eff : d.alpha;
          const double w = alpha_eff * T;

          const Vec3 c_tri = interpolate_color(d.color[0].rgb, d.color[1].rgb, d.color[2].rgb,
                                               pc.lambda);
          color += w * c_tri;
          Vec3 n = d.lay.normal;
          if (opt.camera_facing_normals && n.dot(ray.dir) > 0.0) n = -n;
          normal += w * n;
          weight_sum += w;
          weighted_depth += w * pc.depth;

          const double T_next = T * (1.0 - blend_opacity);
          if (median < 0 && T_next < 0.5) {
            median = static_cast<std::int32_t>(blended);
            median_depth = pc.depth;
          }
          T = T_next;
          contribs.push_back(pc);
          ++blended;
          if (T < opt.transmittance_min) break;
        }
        color += T * opt.background;

        for (int c = 0; c < 3; ++c) {
          out.color.at(x, y, c) = color[c];
          out.normal.at(x, y, c) = normal[c];
        }
        out.transmittance.at(x, y, 0) = T;
        const std::size_t pix = out.pixel_index(x, y);
        out.weight_sum[pix] = weight_sum;
        out.median_index[pix] = median;
        if (opt.depth_mode == DepthMode::kMedian) {
          if (median >= 0) out.depth.at(x, y, 0) = median_depth;
        } else if (weight_sum > 1e-6) {
          out.depth.at(x, y, 0) = weighted_depth / weight_sum;
        }
        counts[pixel_slot] = blended;
      }
    }
  });

  // stitch per-tile contributor storage into one array, tile order fixed
  std::size_t total = 0;
  for (const auto& v : tile_contribs) total += v.size();
  out.contribs.reserve(total);
  for (int tile = 0; tile < num_tiles; ++tile) {
    const TileSpan span = tile_span(out.binning, tile, cam.width, cam.height);
    std::size_t slot = 0;
    std::size_t consumed = 0;
    for (int y = span.y0; y <= span.y1; ++y) {
      for (int x = span.x0; x <= span.x1; ++x, ++slot) {
        const std::uint32_t n = tile_counts[tile].empty() ? 0 : tile_counts[tile][slot];
        const std::size_t pix = out.pixel_index(x, y);
        out.contrib_start[pix] = static_cast<std::uint32_t>(out.contribs.size());
        out.contrib_count[pix] = n;
        for (std::uint32_t k = 0; k < n; ++k) {
          out.contribs.push_back(tile_contribs[tile][consumed + k]);
        }
        consumed += n;
      }
    }
  }
  return out;
}

namespace {

/// Flat per-tile gradient records, indexed by position in the tile's bin list.
struct TileGradBuffer {
  int record_len = 0;
  int sh_len = 0;
  std::vector<double> data;
  std::vector<char> touched;

  void init(std::size_t tris, int active_coeffs) {
    sh_len = 3 * active_coeffs * 3;
    record_len = 9 + 9 + 1 + 1 + sh_len;
    data.assign(tris * record_len, 0.0);
    touched.assign(tris, 0);
  }
  double* record(std::size_t local) { return data.data() + local * record_len; }
};

struct GradOffsets {
  static constexpr int kVertex = 0;    // 3 x Vec3
  static constexpr int kViewDir = 9;   // 3 x Vec3
  static constexpr int kAlpha = 18;
  static constexpr int kSigma = 19;
  static constexpr int kSh = 20;
};

void merge_record(TriangleSoup& soup, const RenderOptions& opt, const Camera& cam,
                  const TriRenderData& d, std::int32_t tri, const double* rec,
                  int active_coeffs) {
  std::array<Vec3, 3> gv;
  for (int v = 0; v < 3; ++v) {
    gv[v] = Vec3(rec[GradOffsets::kVertex + 3 * v], rec[GradOffsets::kVertex + 3 * v + 1],
                 rec[GradOffsets::kVertex + 3 * v + 2]);
  }

  const Vec3 cam_center = cam.center();
  if (opt.per_vertex_view_dirs) {
    for (int v = 0; v < 3; ++v) {
      const Vec3 gdir(rec[GradOffsets::kViewDir + 3 * v], rec[GradOffsets::kViewDir + 3 * v + 1],
                      rec[GradOffsets::kViewDir + 3 * v + 2]);
      if (gdir.isZero(0.0)) continue;
      const Vec3 rel = d.lay.v[v] - cam_center;
      const double n = rel.norm();
      if (n > 0.0) {
        const Vec3 dir = rel / n;
        gv[v] += (gdir - dir * dir.dot(gdir)) / n;
      }
    }
  } else {
    const Vec3 gdir(rec[GradOffsets::kViewDir], rec[GradOffsets::kViewDir + 1],
                    rec[GradOffsets::kViewDir + 2]);
    if (!gdir.isZero(0.0)) {
      const Vec3 mu(soup.mu.at(tri)[0], soup.mu.at(tri)[1], soup.mu.at(tri)[2]);
      const Vec3 rel = mu - cam_center;
      const double n = rel.norm();
      if (n > 0.0) {
        const Vec3 dir = rel / n;
        const Vec3 g = (gdir - dir * dir.dot(gdir)) / n;
        double* g_mu = soup.mu.grad_at(tri);
        for (int k = 0; k < 3; ++k) g_mu[k] += g[k];
      }
    }
  }

  soup.accumulate_vertex_grads(tri, gv);
  soup.accumulate_alpha_grad(tri, rec[GradOffsets::kAlpha]);
  soup.accumulate_sigma_grad(tri, rec[GradOffsets::kSigma]);

  const int full_block = soup.sh_coeffs() * 3;
  const int active_block = active_coeffs * 3;
  double* g_sh = soup.sh.grad_at(tri);
  for (int v = 0; v < 3; ++v) {
    const double* src = rec + GradOffsets::kSh + v * active_block;
    double* dst = g_sh + v * full_block;
    for (int k = 0; k < active_block; ++k) dst[k] += src[k];
  }
}

}  // namespace

void render_backward(TriangleSoup& soup, const Camera& cam, const RenderOptions& opt_in,
                     const RenderOutput& out, const ImageD& grad_color,
                     const ImageD& grad_depth, const ImageD& grad_normal) {
  RenderOptions opt = opt_in;
  opt.active_sh_degree = std::min(opt.active_sh_degree, soup.sh_degree());
  TRISOUP_CHECK(grad_color.width == out.width && grad_color.height == out.height &&
                    grad_color.channels == 3,
                "render_backward: grad_color shape mismatch");
  TRISOUP_CHECK(grad_depth.width == out.width && grad_depth.height == out.height &&
                    grad_depth.channels == 1,
                "render_backward: grad_depth shape mismatch");
  TRISOUP_CHECK(grad_normal.width == out.width && grad_normal.height == out.height &&
                    grad_normal.channels == 3,
                "render_backward: grad_normal shape mismatch");

  const int num_tiles = out.binning.tile_count();
  const int active_coeffs = sh_coeff_count(opt.active_sh_degree);

  std::vector<TileGradBuffer> tile_buffers(num_tiles);
  std::unique_ptr<std::atomic_flag[]> locks;
  if (!opt.deterministic) {
    locks = std::make_unique<std::atomic_flag[]>(soup.count());
    for (std::size_t i = 0; i < soup.count(); ++i) locks[i].clear();
  }

  parallel_for(num_tiles, [&](int tile) {
    const auto& tris = out.binning.tiles[tile];
    if (tris.empty()) return;
    TileGradBuffer& buf = tile_buffers[tile];
    buf.init(tris.size(), active_coeffs);

    // local index of each triangle in this tile's list
    // (bin lists are sorted by construction, so binary search)
    const auto local_index = [&](std::int32_t id) {
      const auto it = std::lower_bound(tris.begin(), tris.end(), id);
      return static_cast<std::size_t>(it - tris.begin());
    };

    const TileSpan span = tile_span(out.binning, tile, out.width, out.height);
    std::vector<double> t_seq;  // transmittance before each contributor
    for (int y = span.y0; y <= span.y1; ++y) {
      for (int x = span.x0; x <= span.x1; ++x) {
        const std::size_t pix = out.pixel_index(x, y);
        const std::uint32_t begin = out.contrib_start[pix];
        const int n = static_cast<int>(out.contrib_count[pix]);
        if (n == 0) continue;

        const Vec3 u_color(grad_color.at(x, y, 0), grad_color.at(x, y, 1),
                           grad_color.at(x, y, 2));
        const Vec3 u_normal(grad_normal.at(x, y, 0), grad_normal.at(x, y, 1),
                            grad_normal.at(x, y, 2));
        const double u_depth = grad_depth.at(x, y, 0);
        if (u_color.isZero(0.0) && u_normal.isZero(0.0) && u_depth == 0.0) continue;

        const Ray ray = cam.pixel_ray(x, y);
        const double weight_sum = out.weight_sum[pix];
        const std::int32_t median = out.median_index[pix];
        const bool mean_mode = out.mode == DepthMode::kMean;
        const bool mean_valid = mean_mode && weight_sum > 1e-6;
        const double mean_depth = mean_valid ? out.depth.at(x, y, 0) : 0.0;

        // forward replay of transmittance
        t_seq.resize(n + 1);
        t_seq[0] = 1.0;
        for (int j = 0; j < n; ++j) {
          const PixelContrib& pc = out.contribs[begin + j];
          const TriRenderData& d = out.tri_data[pc.tri];
          const double alpha_eff = d.alpha * pc.w_sigma;
          const double blend_opacity = opt.transmittance_uses_diffuse ? alpha_eff : d.alpha;
          t_seq[j + 1] = t_seq[j] * (1.0 - blend_opacity);
        }
        const double t_fin = t_seq[n];
        const double u_t_bg = u_color.dot(opt.background);

        // suffix accumulator: sum_{k>j} v_k w_k + dL/dT_fin * T_fin
        double suffix = u_t_bg * t_fin;

        for (int j = n - 1; j >= 0; --j) {
          const PixelContrib& pc = out.contribs[begin + j];
          const TriRenderData& d = out.tri_data[pc.tri];
          const double alpha_eff = d.alpha * pc.w_sigma;
          const double blend_opacity = opt.transmittance_uses_diffuse ? alpha_eff : d.alpha;
          const double T = t_seq[j];
          const double w = alpha_eff * T;

          Vec3 n_hat = d.lay.normal;
          double flip = 1.0;
          if (opt.camera_facing_normals && n_hat.dot(ray.dir) > 0.0) {
            n_hat = -n_hat;
            flip = -1.0;
          }
          const Vec3 c_tri = interpolate_color(d.color[0].rgb, d.color[1].rgb,
                                               d.color[2].rgb, pc.lambda);

          // dL/dw_j
          double v_j = u_color.dot(c_tri) + u_normal.dot(n_hat);
          if (mean_valid) v_j += u_depth * (pc.depth - mean_depth) / weight_sum;

          // dL/d(blend opacity), via all later weights and the background
          double g_alpha = 0.0;
          double g_wsigma = 0.0;
          const double one_minus = std::max(1.0 - blend_opacity, 1e-12);
          if (opt.transmittance_uses_diffuse) {
            const double g_b = v_j * T - suffix / one_minus;
            g_alpha = g_b * pc.w_sigma;
            g_wsigma = g_b * d.alpha;
          } else {
            g_alpha = v_j * pc.w_sigma * T - suffix / one_minus;
            g_wsigma = v_j * d.alpha * T;
          }
          suffix += v_j * w;

          double g_depth_j = 0.0;
          if (mean_valid) g_depth_j += u_depth * w / weight_sum;
          if (!mean_mode && median == j) g_depth_j += u_depth;

          const Vec3 g_c = w * u_color;
          const Vec3 g_nhat_blend = (w * flip) * u_normal;

          // color interpolation: into vertex colors and barycentrics
          Vec3 g_lambda;
          for (int vtx = 0; vtx < 3; ++vtx) g_lambda[vtx] = d.color[vtx].rgb.dot(g_c);

          const DiffuseWeight dw = diffuse_weight(pc.edge_dist, d.sigma);
          const double g_l = g_wsigma * dw.dw_dl;
          const double g_sigma_act = g_wsigma * dw.dw_dsigma;

          Intersection isect;
          isect.valid = true;
          isect.depth = pc.depth;
          isect.point = ray.origin + pc.depth * ray.dir;
          isect.lambda = pc.lambda;
          isect.edge_dist = pc.edge_dist;
          isect.nearest_edge = pc.nearest_edge;
          isect.corner_vertex = pc.corner_vertex;
          const std::array<Vec3, 3> gv = intersect_backward(
              ray, d.lay, isect, g_depth_j, g_lambda, g_l, g_nhat_blend);

          const std::size_t local = local_index(pc.tri);
          double* rec = buf.record(local);
          buf.touched[local] = 1;
          for (int vtx = 0; vtx < 3; ++vtx)
            for (int k = 0; k < 3; ++k) rec[GradOffsets::kVertex + 3 * vtx + k] += gv[vtx][k];
          rec[GradOffsets::kAlpha] += g_alpha;
          rec[GradOffsets::kSigma] += g_sigma_act;

          // SH backward per vertex
          for (int vtx = 0; vtx < 3; ++vtx) {
            const Vec3 g_rgb = pc.lambda[vtx] * g_c;
            if (g_rgb.isZero(0.0)) continue;
            double* g_coeffs = rec + GradOffsets::kSh + vtx * active_coeffs * 3;
            const Vec3 g_dir = eval_sh_vertex_backward(
                soup.sh_vertex(pc.tri, vtx), opt.active_sh_degree, d.view_dir[vtx],
                d.color[vtx], g_rgb, g_coeffs);
            const int dir_slot = opt.per_vertex_view_dirs ? vtx : 0;
            for (int k = 0; k < 3; ++k) rec[GradOffsets::kViewDir + 3 * dir_slot + k] += g_dir[k];
          }
        }
      }
    }

    if (!opt.deterministic) {
      // merge immediately under per-triangle locks, then drop the buffer
      for (std::size_t local = 0; local < tris.size(); ++local) {
        if (!buf.touched[local]) continue;
        const std::int32_t id = tris[local];
        while (locks[id].test_and_set(std::memory_order_acquire)) {
        }
        merge_record(soup, opt, cam, out.tri_data[id], id, buf.record(local), active_coeffs);
        locks[id].clear(std::memory_order_release);
      }
      buf.data.clear();
      buf.data.shrink_to_fit();
      buf.touched.clear();
    }
  });

  if (opt.deterministic) {
    for (int tile = 0; tile < num_tiles; ++tile) {
      const auto& tris = out.binning.tiles[tile];
      TileGradBuffer& buf = tile_buffers[tile];
      if (buf.touched.empty()) continue;
      for (std::size_t local = 0; local < tris.size(); ++local) {
        if (!buf.touched[local]) continue;
        const std::int32_t id = tris[local];
        merge_record(soup, opt, cam, out.tri_data[id], id, buf.record(local), active_coeffs);
      }
    }
  }
}

}  // namespace trisoup
