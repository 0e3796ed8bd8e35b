#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trisoup/connect/edge_graph.hpp"
#include "trisoup/density/density_control.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// Everything needed to resume training bit-exactly: raw parameter arrays,
/// Adam moments, densify statistics, the live edge graph, RNG state, and the
/// camera epoch cursor.
struct Checkpoint {
  TriangleSoup soup;
  DensifyStats stats;
  EdgeGraph graph;
  std::int64_t iteration = 0;
  std::int64_t adam_steps = 0;
  double split_size_threshold = 0.0;
  std::string rng_state;
  std::vector<std::int32_t> camera_order;
  std::int64_t epoch_pos = 0;
};

/// Versioned little-endian binary container; layout documented in the README.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace trisoup
