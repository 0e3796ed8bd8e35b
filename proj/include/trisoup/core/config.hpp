#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trisoup {

/// Every tunable of the pipeline, with defaults. Serializable to a flat
/// key = value file (see config_schema() for the full key list).
struct TrainConfig {
  // model
  int sh_degree = 3;
  double init_opacity = 0.1;
  double sigma_init_fraction = 0.5;
  double near_plane = 0.01;
  double bg_r = 0.0, bg_g = 0.0, bg_b = 0.0;

  // rasterizer
  std::string depth_mode = "median";  // median | mean
  int tile_size = 16;
  double transmittance_min = 1e-4;
  bool transmittance_uses_diffuse = true;
  bool deterministic = true;
  bool per_vertex_view_dirs = false;
  bool camera_facing_normals = true;

  // losses
  double w_photo = 1.0;
  double w_normal = 0.05;
  double w_smooth = 0.8;
  double w_conn = 10.0;
  double gamma = 0.2;
  bool smoothness_positive_exponent = false;

  // schedule
  std::int64_t iterations = 25000;
  std::int64_t normal_loss_start = 7000;
  std::int64_t smooth_loss_start = 10000;
  std::int64_t conn_loss_start = 10000;
  std::int64_t densify_start = 2000;
  std::int64_t densify_interval = 250;
  std::int64_t densify_until = 15000;
  std::int64_t opacity_reset_interval = 3000;
  std::int64_t sh_unlock_interval = 1000;
  std::int64_t graph_rebuild_interval = 500;

  // optimizer
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_mu_init = 1.5e-4;
  double lr_mu_final = 2e-6;
  double lr_rotation = 1e-3;
  double lr_scale = 4e-3;
  double lr_sigma = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  // density control
  double densify_grad_threshold = 7.5e-5;
  double prune_opacity = 0.005;
  double clone_jitter_factor = 0.1;
  double opacity_reset_value = 0.1;
  bool opacity_reset_exact = false;
  double split_size_threshold = 0.0;  // 0 = median initial circumradius
  std::int64_t max_triangles = 4000000;

  // connectivity
  double conn_tau = 0.0;
  double conn_rho = 0.0;
  double conn_search_radius_factor = 3.0;
  bool conn_use_outward_vectors = true;

  // dataset / run
  double resolution_scale = 1.0;
  std::int64_t holdout_every = 0;
  std::int64_t rng_seed = 0;
  std::int64_t metrics_interval = 100;
  std::int64_t checkpoint_interval = 0;  // 0 = final only

  // depth-map fusion
  double fusion_px_thresh = 1.0;
  std::int64_t fusion_min_views = 3;
  double fusion_depth_rel_thresh = 0.0;  // 0 = pixel error only

  void validate() const;
};

struct ConfigKey {
  std::string section;
  std::string name;
  enum Kind { kDouble, kInt, kBool, kString } kind;
  std::size_t offset;
};

const std::vector<ConfigKey>& config_schema();
std::vector<std::string> config_key_names();

/// Parses `key = value` lines; `#` comments and `[section]` headers allowed.
/// Unknown keys raise ValidationError naming every valid key.
TrainConfig load_config(const std::string& path);
void apply_config_line(TrainConfig& cfg, const std::string& key, const std::string& value);
void apply_overrides(TrainConfig& cfg, const std::vector<std::string>& key_eq_value);

std::string serialize_config(const TrainConfig& cfg);
void save_config(const TrainConfig& cfg, const std::string& path);

}  // namespace trisoup
