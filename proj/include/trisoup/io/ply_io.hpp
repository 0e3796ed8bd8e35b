#pragma once

#include <string>
#include <vector>

#include "trisoup/core/types.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// ASCII PLY of the soup: three vertices per triangle with DC-band colors,
/// one face each. Viewable in standard mesh tools.
void write_soup_ply(const std::string& path, const TriangleSoup& soup);

/// Binary little-endian PLY point cloud (float positions, uchar colors).
void write_point_cloud_ply(const std::string& path, const std::vector<Vec3>& points,
                           const std::vector<Vec3>& colors);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
};

/// Reads the point clouds this project writes (binary_little_endian or ascii,
/// x/y/z float or double plus optional uchar colors).
PointCloud read_point_cloud_ply(const std::string& path);

/// OBJ polyline export of edge-graph connections for inspection.
void write_polyline_obj(const std::string& path,
                        const std::vector<std::pair<Vec3, Vec3>>& segments);

}  // namespace trisoup
