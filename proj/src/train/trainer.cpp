#include "trisoup/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "trisoup/core/error.hpp"
#include "trisoup/io/metrics.hpp"
#include "trisoup/render/rasterizer.hpp"
#include "trisoup/train/adam.hpp"

namespace trisoup {

Trainer::Trainer(Dataset dataset, TrainConfig cfg)
    : dataset_(std::move(dataset)), cfg_(std::move(cfg)) {
  cfg_.validate();
  dataset_.validate();
  if (dataset_.cameras.size() < 2) {
    throw ValidationError("training needs at least 2 posed images, got " +
                          std::to_string(dataset_.cameras.size()));
  }
  for (std::size_t i = 0; i < dataset_.cameras.size(); ++i) {
    const bool held_out = cfg_.holdout_every > 0 &&
                          static_cast<std::int64_t>(i) % cfg_.holdout_every == 0;
    (held_out ? holdout_views_ : train_views_).push_back(static_cast<int>(i));
  }
  if (train_views_.empty()) {
    throw ValidationError("holdout_every leaves no training views");
  }
}

GraphBuildParams Trainer::graph_params() const {
  GraphBuildParams params;
  params.tau = cfg_.conn_tau;
  params.rho = cfg_.conn_rho;
  params.search_radius_factor = cfg_.conn_search_radius_factor;
  params.use_outward_vectors = cfg_.conn_use_outward_vectors;
  return params;
}

void Trainer::initialize() {
  soup_ = init_from_points(dataset_.seed, cfg_, static_cast<std::uint64_t>(cfg_.rng_seed));
  stats_.reset(soup_.count());
  split_size_threshold_ = cfg_.split_size_threshold > 0.0 ? cfg_.split_size_threshold
                                                          : median_circumradius(soup_);
  rng_ = Rng(static_cast<std::uint64_t>(cfg_.rng_seed));
  iteration_ = 0;
  adam_steps_ = 0;
  camera_order_.assign(train_views_.begin(), train_views_.end());
  rng_.shuffle(camera_order_);
  epoch_pos_ = 0;
  rebuild_graph();
}

void Trainer::restore(const Checkpoint& ck) {
  soup_ = ck.soup;
  stats_ = ck.stats;
  graph_ = ck.graph;
  iteration_ = ck.iteration;
  adam_steps_ = ck.adam_steps;
  split_size_threshold_ = ck.split_size_threshold;
  rng_.load_state(ck.rng_state);
  camera_order_ = ck.camera_order;
  epoch_pos_ = ck.epoch_pos;
  if (graph_.stale_for(soup_)) rebuild_graph();
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.soup = soup_;
  ck.stats = stats_;
  ck.graph = graph_;
  ck.iteration = iteration_;
  ck.adam_steps = adam_steps_;
  ck.split_size_threshold = split_size_threshold_;
  ck.rng_state = rng_.save_state();
  ck.camera_order = camera_order_;
  ck.epoch_pos = epoch_pos_;
  return ck;
}

int Trainer::active_sh_degree() const {
  const std::int64_t unlocked = iteration_ / cfg_.sh_unlock_interval;
  return static_cast<int>(std::min<std::int64_t>(cfg_.sh_degree, unlocked));
}

int Trainer::next_camera() {
  if (epoch_pos_ >= static_cast<std::int64_t>(camera_order_.size())) {
    rng_.shuffle(camera_order_);
    epoch_pos_ = 0;
  }
  return camera_order_[epoch_pos_++];
}

void Trainer::rebuild_graph() {
  graph_ = build_graph(soup_, graph_params(), iteration_);
}

RenderOutput Trainer::render_view(int view_index, DepthMode mode_override) const {
  RenderOptions opt = make_render_options(cfg_, active_sh_degree());
  opt.depth_mode = mode_override;
  return render(soup_, dataset_.cameras[view_index], opt);
}

RenderOutput Trainer::render_view(int view_index) const {
  return render(soup_, dataset_.cameras[view_index],
                make_render_options(cfg_, active_sh_degree()));
}

IterationEvent Trainer::step() {
  TRISOUP_CHECK(soup_.count() > 0, "Trainer::step: empty soup");
  IterationEvent ev;
  const std::int64_t t = iteration_;
  ev.iteration = t;
  ev.active_sh_degree = active_sh_degree();

  const int cam_idx = next_camera();
  ev.camera_index = cam_idx;
  const Camera& cam = dataset_.cameras[cam_idx];
  const ImageD& target = dataset_.images[cam_idx];

  const RenderOptions opt = make_render_options(cfg_, ev.active_sh_degree);
  const RenderOutput out = render(soup_, cam, opt);

  std::vector<char> visible(soup_.count(), 0);
  for (const auto& tile : out.binning.tiles) {
    for (const std::int32_t id : tile) visible[id] = 1;
  }

  soup_.zero_grads();
  LossGrads grads;
  ev.losses = evaluate_losses(soup_, out, target, cam, cfg_, t, &graph_, &visible, &grads,
                              /*accumulate_param_grads=*/true);
  render_backward(soup_, cam, opt, out, grads.color, grads.depth, grads.normal);
  accumulate_stats(stats_, soup_, out.binning.screen_extent);

  ++adam_steps_;
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2, eps = cfg_.adam_eps;
  ev.nonfinite_grads_skipped += adam_step(soup_.mu, lr_mu_schedule(t, cfg_), b1, b2, eps,
                                          adam_steps_);
  ev.nonfinite_grads_skipped += adam_step(soup_.sh, cfg_.lr_sh, b1, b2, eps, adam_steps_);
  ev.nonfinite_grads_skipped += adam_step(soup_.scale_raw, cfg_.lr_scale, b1, b2, eps,
                                          adam_steps_);
  ev.nonfinite_grads_skipped += adam_step(soup_.quat, cfg_.lr_rotation, b1, b2, eps,
                                          adam_steps_);
  ev.nonfinite_grads_skipped += adam_step(soup_.opacity_raw, cfg_.lr_opacity, b1, b2, eps,
                                          adam_steps_);
  ev.nonfinite_grads_skipped += adam_step(soup_.sigma_raw, cfg_.lr_sigma, b1, b2, eps,
                                          adam_steps_);
  soup_.renormalize_quaternions();

  iteration_ = t + 1;
  const std::int64_t completed = iteration_;

  if (completed > cfg_.densify_start && completed <= cfg_.densify_until &&
      completed % cfg_.densify_interval == 0) {
    ev.densify_report = densify_and_prune(soup_, stats_, cfg_, split_size_threshold_);
    ev.densified = true;
  }
  if (cfg_.opacity_reset_interval > 0 && completed % cfg_.opacity_reset_interval == 0) {
    reset_opacity(soup_, cfg_);
    ev.opacity_was_reset = true;
  }
  if (ev.densified || graph_.stale_for(soup_) ||
      completed % cfg_.graph_rebuild_interval == 0) {
    rebuild_graph();
    ev.graph_rebuilt = true;
  }

  ev.triangle_count = soup_.count();
  return ev;
}

void Trainer::run(const std::function<void(const IterationEvent&)>& observer) {
  while (!done()) {
    const IterationEvent ev = step();
    if (observer) observer(ev);
  }
}

double Trainer::holdout_psnr() {
  if (holdout_views_.empty()) return -1.0;
  double total = 0.0;
  for (const int view : holdout_views_) {
    const RenderOutput out = render_view(view);
    total += psnr(out.color, dataset_.images[view]);
  }
  return total / holdout_views_.size();
}

}  // namespace trisoup
