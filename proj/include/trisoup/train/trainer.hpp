#pragma once

#include <functional>

#include "trisoup/connect/edge_graph.hpp"
#include "trisoup/core/config.hpp"
#include "trisoup/core/rng.hpp"
#include "trisoup/density/density_control.hpp"
#include "trisoup/io/checkpoint.hpp"
#include "trisoup/io/colmap.hpp"
#include "trisoup/loss/losses.hpp"

namespace trisoup {

struct IterationEvent {
  std::int64_t iteration = 0;  // 0-based index of the iteration just executed
  int camera_index = -1;
  int active_sh_degree = 0;
  LossBreakdown losses;
  std::size_t triangle_count = 0;
  bool densified = false;
  DensifyReport densify_report;
  bool opacity_was_reset = false;
  bool graph_rebuilt = false;
  std::size_t nonfinite_grads_skipped = 0;
};

/// The optimization loop: camera sampling, render, scheduled losses,
/// backward, Adam, density control, graph upkeep.
class Trainer {
 public:
  Trainer(Dataset dataset, TrainConfig cfg);

  /// Fresh start from the dataset's sparse seed.
  void initialize();

  void restore(const Checkpoint& ck);
  Checkpoint make_checkpoint() const;

  bool done() const { return iteration_ >= cfg_.iterations; }
  IterationEvent step();
  void run(const std::function<void(const IterationEvent&)>& observer = {});

  /// Mean PSNR over the held-out views (-1 when none are held out).
  double holdout_psnr();

  const TriangleSoup& soup() const { return soup_; }
  TriangleSoup& soup() { return soup_; }
  const EdgeGraph& graph() const { return graph_; }
  const Dataset& dataset() const { return dataset_; }
  std::int64_t iteration() const { return iteration_; }
  int active_sh_degree() const;
  double split_size_threshold() const { return split_size_threshold_; }
  const std::vector<int>& train_views() const { return train_views_; }
  const std::vector<int>& holdout_views() const { return holdout_views_; }

  /// Renders one dataset view with the current parameters.
  RenderOutput render_view(int view_index, DepthMode mode_override) const;
  RenderOutput render_view(int view_index) const;

 private:
  int next_camera();
  void rebuild_graph();
  GraphBuildParams graph_params() const;

  Dataset dataset_;
  TrainConfig cfg_;

  TriangleSoup soup_;
  DensifyStats stats_;
  EdgeGraph graph_;
  Rng rng_;
  std::int64_t iteration_ = 0;
  std::int64_t adam_steps_ = 0;
  double split_size_threshold_ = 0.0;
  std::vector<std::int32_t> camera_order_;
  std::int64_t epoch_pos_ = 0;

  std::vector<int> train_views_;
  std::vector<int> holdout_views_;
};

}  // namespace trisoup
