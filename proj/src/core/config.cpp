#include "trisoup/core/config.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <sstream>

#include "trisoup/core/error.hpp"

namespace trisoup {

namespace {

#define CFG_KEY(section, field, kind) \
  ConfigKey { section, #field, ConfigKey::kind, offsetof(TrainConfig, field) }

std::vector<ConfigKey> build_schema() {
  return {
      CFG_KEY("model", sh_degree, kInt),
      CFG_KEY("model", init_opacity, kDouble),
      CFG_KEY("model", sigma_init_fraction, kDouble),
      CFG_KEY("model", near_plane, kDouble),
      CFG_KEY("model", bg_r, kDouble),
      CFG_KEY("model", bg_g, kDouble),
      CFG_KEY("model", bg_b, kDouble),
      CFG_KEY("rasterizer", depth_mode, kString),
      CFG_KEY("rasterizer", tile_size, kInt),
      CFG_KEY("rasterizer", transmittance_min, kDouble),
      CFG_KEY("rasterizer", transmittance_uses_diffuse, kBool),
      CFG_KEY("rasterizer", deterministic, kBool),
      CFG_KEY("rasterizer", per_vertex_view_dirs, kBool),
      CFG_KEY("rasterizer", camera_facing_normals, kBool),
      CFG_KEY("loss", w_photo, kDouble),
      CFG_KEY("loss", w_normal, kDouble),
      CFG_KEY("loss", w_smooth, kDouble),
      CFG_KEY("loss", w_conn, kDouble),
      CFG_KEY("loss", gamma, kDouble),
      CFG_KEY("loss", smoothness_positive_exponent, kBool),
      CFG_KEY("schedule", iterations, kInt),
      CFG_KEY("schedule", normal_loss_start, kInt),
      CFG_KEY("schedule", smooth_loss_start, kInt),
      CFG_KEY("schedule", conn_loss_start, kInt),
      CFG_KEY("schedule", densify_start, kInt),
      CFG_KEY("schedule", densify_interval, kInt),
      CFG_KEY("schedule", densify_until, kInt),
      CFG_KEY("schedule", opacity_reset_interval, kInt),
      CFG_KEY("schedule", sh_unlock_interval, kInt),
      CFG_KEY("schedule", graph_rebuild_interval, kInt),
      CFG_KEY("optimizer", lr_sh, kDouble),
      CFG_KEY("optimizer", lr_opacity, kDouble),
      CFG_KEY("optimizer", lr_mu_init, kDouble),
      CFG_KEY("optimizer", lr_mu_final, kDouble),
      CFG_KEY("optimizer", lr_rotation, kDouble),
      CFG_KEY("optimizer", lr_scale, kDouble),
      CFG_KEY("optimizer", lr_sigma, kDouble),
      CFG_KEY("optimizer", adam_beta1, kDouble),
      CFG_KEY("optimizer", adam_beta2, kDouble),
      CFG_KEY("optimizer", adam_eps, kDouble),
      CFG_KEY("density", densify_grad_threshold, kDouble),
      CFG_KEY("density", prune_opacity, kDouble),
      CFG_KEY("density", clone_jitter_factor, kDouble),
      CFG_KEY("density", opacity_reset_value, kDouble),
      CFG_KEY("density", opacity_reset_exact, kBool),
      CFG_KEY("density", split_size_threshold, kDouble),
      CFG_KEY("density", max_triangles, kInt),
      CFG_KEY("connectivity", conn_tau, kDouble),
      CFG_KEY("connectivity", conn_rho, kDouble),
      CFG_KEY("connectivity", conn_search_radius_factor, kDouble),
      CFG_KEY("connectivity", conn_use_outward_vectors, kBool),
      CFG_KEY("run", resolution_scale, kDouble),
      CFG_KEY("run", holdout_every, kInt),
      CFG_KEY("run", rng_seed, kInt),
      CFG_KEY("run", metrics_interval, kInt),
      CFG_KEY("run", checkpoint_interval, kInt),
      CFG_KEY("fusion", fusion_px_thresh, kDouble),
      CFG_KEY("fusion", fusion_min_views, kInt),
      CFG_KEY("fusion", fusion_depth_rel_thresh, kDouble),
  };
}

#undef CFG_KEY

template <typename T>
T* field_ptr(TrainConfig& cfg, const ConfigKey& key) {
  return reinterpret_cast<T*>(reinterpret_cast<char*>(&cfg) + key.offset);
}
template <typename T>
const T* field_ptr(const TrainConfig& cfg, const ConfigKey& key) {
  return reinterpret_cast<const T*>(reinterpret_cast<const char*>(&cfg) + key.offset);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = build_schema();
  return schema;
}

std::vector<std::string> config_key_names() {
  std::vector<std::string> names;
  for (const auto& k : config_schema()) names.push_back(k.name);
  return names;
}

void apply_config_line(TrainConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  for (const auto& k : config_schema()) {
    if (k.name != key) continue;
    try {
      switch (k.kind) {
        case ConfigKey::kDouble:
          *field_ptr<double>(cfg, k) = std::stod(value);
          return;
        case ConfigKey::kInt:
          *field_ptr<std::int64_t>(cfg, k) = std::stoll(value);
          return;
        case ConfigKey::kBool:
          *field_ptr<bool>(cfg, k) = parse_bool(value, key);
          return;
        case ConfigKey::kString:
          *field_ptr<std::string>(cfg, k) = value;
          return;
      }
    } catch (const std::invalid_argument&) {
      throw ValidationError("config key '" + key + "': cannot parse value '" + value + "'");
    } catch (const std::out_of_range&) {
      throw ValidationError("config key '" + key + "': value out of range '" + value + "'");
    }
  }
  std::ostringstream os;
  os << "unknown config key '" << key << "'. Valid keys:";
  for (const auto& name : config_key_names()) os << " " << name;
  throw ValidationError(os.str());
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_line(cfg, t.substr(0, eq), t.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void apply_overrides(TrainConfig& cfg, const std::vector<std::string>& key_eq_value) {
  for (const auto& kv : key_eq_value) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("override '" + kv + "' is not of the form key=value");
    }
    apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      section = k.section;
      os << "[" << section << "]\n";
    }
    os << k.name << " = ";
    switch (k.kind) {
      case ConfigKey::kDouble:
        os << *field_ptr<double>(cfg, k);
        break;
      case ConfigKey::kInt:
        os << *field_ptr<std::int64_t>(cfg, k);
        break;
      case ConfigKey::kBool:
        os << (*field_ptr<bool>(cfg, k) ? "true" : "false");
        break;
      case ConfigKey::kString:
        os << *field_ptr<std::string>(cfg, k);
        break;
    }
    os << "\n";
  }
  return os.str();
}

void save_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write config file: " + path);
  out << serialize_config(cfg);
}

void TrainConfig::validate() const {
  if (depth_mode != "median" && depth_mode != "mean") {
    throw ValidationError("depth_mode must be 'median' or 'mean', got '" + depth_mode + "'");
  }
  if (sh_degree < 0 || sh_degree > 3) throw ValidationError("sh_degree must be in [0,3]");
  if (tile_size < 1) throw ValidationError("tile_size must be >= 1");
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(init_opacity > 0.0 && init_opacity < 1.0)) {
    throw ValidationError("init_opacity must be in (0,1)");
  }
  if (gamma < 0.0 || gamma > 1.0) throw ValidationError("gamma must be in [0,1]");
  for (const auto cadence : {densify_interval, opacity_reset_interval, sh_unlock_interval,
                             graph_rebuild_interval, metrics_interval}) {
    if (cadence < 1) throw ValidationError("schedule cadences must be >= 1");
  }
  if (w_photo < 0 || w_normal < 0 || w_smooth < 0 || w_conn < 0) {
    throw ValidationError("loss weights must be non-negative");
  }
  if (resolution_scale <= 0.0) throw ValidationError("resolution_scale must be > 0");
}

}  // namespace trisoup
