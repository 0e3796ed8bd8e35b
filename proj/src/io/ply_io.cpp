#include "trisoup/io/ply_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trisoup/core/error.hpp"

namespace trisoup {

namespace {
constexpr double kC0 = 0.28209479177387814;
}

void write_soup_ply(const std::string& path, const TriangleSoup& soup) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write mesh: " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << soup.count() * 3 << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << soup.count() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  out.precision(9);
  for (std::size_t i = 0; i < soup.count(); ++i) {
    const VertexLayout lay = soup.vertex_layout(i);
    for (int v = 0; v < 3; ++v) {
      const double* sh = soup.sh_vertex(i, v);
      out << lay.v[v][0] << " " << lay.v[v][1] << " " << lay.v[v][2];
      for (int c = 0; c < 3; ++c) {
        const double col = std::clamp(sh[c] * kC0 + 0.5, 0.0, 1.0);
        out << " " << static_cast<int>(std::lround(col * 255.0));
      }
      out << "\n";
    }
  }
  for (std::size_t i = 0; i < soup.count(); ++i) {
    out << "3 " << 3 * i << " " << 3 * i + 1 << " " << 3 * i + 2 << "\n";
  }
}

void write_point_cloud_ply(const std::string& path, const std::vector<Vec3>& points,
                           const std::vector<Vec3>& colors) {
  TRISOUP_CHECK(colors.empty() || colors.size() == points.size(),
                "write_point_cloud_ply: color count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write point cloud: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (!colors.empty()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "end_header\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const float xyz[3] = {static_cast<float>(points[i][0]), static_cast<float>(points[i][1]),
                          static_cast<float>(points[i][2])};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (!colors.empty()) {
      unsigned char rgb[3];
      for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<unsigned char>(
            std::lround(std::clamp(colors[i][c], 0.0, 1.0) * 255.0));
      }
      out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
    }
  }
}

PointCloud read_point_cloud_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open point cloud: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw ParseError(path + ": not a PLY file");

  bool binary = false;
  std::size_t vertex_count = 0;
  struct Prop {
    std::string type, name;
  };
  std::vector<Prop> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt == "ascii") {
        binary = false;
      } else {
        throw ParseError(path + ": unsupported PLY format " + fmt);
      }
    } else if (word == "element") {
      std::string kind;
      std::size_t count;
      ss >> kind >> count;
      in_vertex_element = kind == "vertex";
      if (in_vertex_element) vertex_count = count;
    } else if (word == "property" && in_vertex_element) {
      Prop p;
      ss >> p.type >> p.name;
      props.push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (props[k].name == "x") ix = static_cast<int>(k);
    if (props[k].name == "y") iy = static_cast<int>(k);
    if (props[k].name == "z") iz = static_cast<int>(k);
    if (props[k].name == "red") ir = static_cast<int>(k);
    if (props[k].name == "green") ig = static_cast<int>(k);
    if (props[k].name == "blue") ib = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path + ": PLY lacks x/y/z properties");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> values(props.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    for (std::size_t k = 0; k < props.size(); ++k) {
      const std::string& type = props[k].type;
      if (binary) {
        if (type == "float") {
          float f;
          in.read(reinterpret_cast<char*>(&f), sizeof(f));
          values[k] = f;
        } else if (type == "double") {
          double d;
          in.read(reinterpret_cast<char*>(&d), sizeof(d));
          values[k] = d;
        } else if (type == "uchar" || type == "uint8") {
          unsigned char b;
          in.read(reinterpret_cast<char*>(&b), sizeof(b));
          values[k] = b;
        } else {
          throw ParseError(path + ": unsupported property type " + type);
        }
      } else {
        if (!(in >> values[k])) throw ParseError(path + ": truncated ASCII vertex data");
      }
    }
    if (!in) throw ParseError(path + ": truncated PLY vertex data");
    cloud.points.emplace_back(values[ix], values[iy], values[iz]);
    if (ir >= 0 && ig >= 0 && ib >= 0) {
      cloud.colors.emplace_back(values[ir] / 255.0, values[ig] / 255.0, values[ib] / 255.0);
    }
  }
  return cloud;
}

void write_polyline_obj(const std::string& path,
                        const std::vector<std::pair<Vec3, Vec3>>& segments) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write polyline file: " + path);
  out.precision(9);
  for (const auto& [a, b] : segments) {
    out << "v " << a[0] << " " << a[1] << " " << a[2] << "\n";
    out << "v " << b[0] << " " << b[1] << " " << b[2] << "\n";
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out << "l " << 2 * i + 1 << " " << 2 * i + 2 << "\n";
  }
}

}  // namespace trisoup
