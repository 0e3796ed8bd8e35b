#include "trisoup/core/error.hpp"
#include "trisoup/loss/losses.hpp"

namespace trisoup {

LossBreakdown evaluate_losses(TriangleSoup& soup, const RenderOutput& out,
                              const ImageD& target, const Camera& cam,
                              const TrainConfig& cfg, std::int64_t iteration,
                              const EdgeGraph* graph, const std::vector<char>* visible,
                              LossGrads* grads, bool accumulate_param_grads) {
  LossBreakdown res;
  const LossSchedule sched = loss_schedule(cfg, iteration);
  const bool with_grad = grads != nullptr;

  if (with_grad) {
    grads->color = ImageD(out.width, out.height, 3);
    grads->depth = ImageD(out.width, out.height, 1);
    grads->normal = ImageD(out.width, out.height, 3);
  }

  if (cfg.w_photo > 0.0) {
    PhotometricResult photo = photometric_loss(out.color, target, cfg.gamma, with_grad);
    res.photometric = photo.value;
    res.l1 = photo.l1;
    res.ssim = photo.ssim;
    res.total += cfg.w_photo * photo.value;
    if (with_grad) {
      for (std::size_t i = 0; i < grads->color.data.size(); ++i) {
        grads->color.data[i] += cfg.w_photo * photo.grad.data[i];
      }
    }
  }

  if (sched.normal_active) {
    NormalConsistencyResult nres = normal_consistency_loss(out.normal, out.depth, cam,
                                                           with_grad);
    res.normal = nres.value;
    res.total += cfg.w_normal * nres.value;
    if (with_grad && nres.valid_pixels > 0) {
      for (std::size_t i = 0; i < grads->normal.data.size(); ++i) {
        grads->normal.data[i] += cfg.w_normal * nres.grad_normal.data[i];
      }
      for (std::size_t i = 0; i < grads->depth.data.size(); ++i) {
        grads->depth.data[i] += cfg.w_normal * nres.grad_depth.data[i];
      }
    }
  }

  if (sched.smooth_active) {
    SmoothnessResult sres = smoothness_loss(out.depth, target,
                                            cfg.smoothness_positive_exponent, with_grad);
    res.smooth = sres.value;
    res.total += cfg.w_smooth * sres.value;
    if (with_grad) {
      for (std::size_t i = 0; i < grads->depth.data.size(); ++i) {
        grads->depth.data[i] += cfg.w_smooth * sres.grad_depth.data[i];
      }
    }
  }

  if (sched.conn_active) {
    TRISOUP_CHECK(graph != nullptr && visible != nullptr,
                  "evaluate_losses: connectivity scheduled but graph/visibility missing");
    const double value = connectivity_loss(soup, *graph, *visible, accumulate_param_grads,
                                           cfg.w_conn);
    res.connectivity = value;
    res.total += cfg.w_conn * value;
  }

  return res;
}

}  // namespace trisoup
