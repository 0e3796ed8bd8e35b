#pragma once

#include "trisoup/connect/edge_graph.hpp"
#include "trisoup/core/config.hpp"
#include "trisoup/core/image.hpp"
#include "trisoup/geom/camera.hpp"
#include "trisoup/render/rasterizer.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, K1 = 0.01,
/// K2 = 0.03, unit dynamic range), averaged over channels.
double ssim(const ImageD& a, const ImageD& b);

struct PhotometricResult {
  double value = 0.0;
  double l1 = 0.0;
  double ssim = 1.0;
  ImageD grad;  // dL/d(rendered)
};

/// (1-gamma) * L1 + gamma * (1 - SSIM) / 2 with analytic gradients through
/// the windowed statistics.
PhotometricResult photometric_loss(const ImageD& rendered, const ImageD& target,
                                   double gamma, bool with_grad = true);

struct NormalConsistencyResult {
  double value = 0.0;
  int valid_pixels = 0;
  ImageD grad_normal;
  ImageD grad_depth;
};

/// Mean (1 - n . n_d) between the normalized blended normal and the normal of
/// the back-projected depth map. Pixels missing depth at the +x/+y taps are
/// masked out.
NormalConsistencyResult normal_consistency_loss(const ImageD& normal, const ImageD& depth,
                                                const Camera& cam, bool with_grad = true);

struct SmoothnessResult {
  double value = 0.0;
  ImageD grad_depth;
};

/// Edge-aware depth smoothness: |dD| exp(-|dI|) with forward differences,
/// normalized by the pixel count. positive_exponent reproduces the variant
/// with exp(+|dI|).
SmoothnessResult smoothness_loss(const ImageD& depth, const ImageD& target_rgb,
                                 bool positive_exponent = false, bool with_grad = true);

/// Paired-vertex distances plus normal alignment over connections whose
/// source triangle is visible. Gradients (scaled by `grad_scale`) accumulate
/// into the soup buffers when accumulate_grads is set.
double connectivity_loss(TriangleSoup& soup, const EdgeGraph& graph,
                         const std::vector<char>& visible, bool accumulate_grads,
                         double grad_scale = 1.0);

struct LossBreakdown {
  double total = 0.0;
  double photometric = 0.0;
  double l1 = 0.0;
  double ssim = 1.0;
  double normal = 0.0;
  double smooth = 0.0;
  double connectivity = 0.0;
};

struct LossGrads {
  ImageD color;
  ImageD depth;
  ImageD normal;
};

struct LossSchedule {
  bool normal_active = false;
  bool smooth_active = false;
  bool conn_active = false;
};

LossSchedule loss_schedule(const TrainConfig& cfg, std::int64_t iteration);

/// Evaluates every scheduled term. When grads is non-null the image-space
/// gradients are produced; connectivity gradients go straight into the soup
/// buffers (scaled by its weight) when accumulate_param_grads is set.
LossBreakdown evaluate_losses(TriangleSoup& soup, const RenderOutput& out,
                              const ImageD& target, const Camera& cam,
                              const TrainConfig& cfg, std::int64_t iteration,
                              const EdgeGraph* graph, const std::vector<char>* visible,
                              LossGrads* grads, bool accumulate_param_grads);

}  // namespace trisoup
