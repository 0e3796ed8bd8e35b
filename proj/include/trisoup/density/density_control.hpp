#pragma once

#include <cstdint>
#include <vector>

#include "trisoup/core/config.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// Per-triangle gradient statistics driving densification. max_grad_mu tracks
/// the largest reference-point gradient norm since the last event; grad_dir
/// remembers that gradient's direction for clone placement.
struct DensifyStats {
  std::vector<double> max_grad_mu;
  std::vector<Vec3> grad_dir;
  std::vector<double> max_screen_extent;

  std::size_t size() const { return max_grad_mu.size(); }
  void reset(std::size_t count) {
    max_grad_mu.assign(count, 0.0);
    grad_dir.assign(count, Vec3::Zero());
    max_screen_extent.assign(count, 0.0);
  }
};

/// Folds one iteration's mu gradients (from the soup buffers) and projected
/// screen extents into the running maxima.
void accumulate_stats(DensifyStats& stats, const TriangleSoup& soup,
                      const std::vector<double>& screen_extent);

struct DensifyReport {
  std::size_t split = 0;
  std::size_t cloned = 0;
  std::size_t pruned = 0;
  std::size_t count_after = 0;
};

/// Splits large high-gradient triangles four ways at the edge midpoints,
/// clones small ones, prunes transparent or degenerate ones. Adam moments:
/// zeroed for split children, copied for clones. Stats are reset. The caller
/// must rebuild any edge graph afterwards.
DensifyReport densify_and_prune(TriangleSoup& soup, DensifyStats& stats,
                                const TrainConfig& cfg, double split_size_threshold);

/// Clamps every activated opacity down to `value` (or sets it exactly when
/// cfg.opacity_reset_exact). Opacity Adam moments are zeroed.
void reset_opacity(TriangleSoup& soup, const TrainConfig& cfg);

}  // namespace trisoup
