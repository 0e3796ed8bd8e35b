#include "trisoup/io/colmap.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "trisoup/core/error.hpp"
#include "trisoup/io/raster_io.hpp"

namespace fs = std::filesystem;

namespace trisoup {

void Dataset::validate() const {
  if (cameras.size() != images.size()) {
    throw ValidationError("dataset: camera/image count mismatch");
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    if (images[i].width != cameras[i].width || images[i].height != cameras[i].height) {
      throw ValidationError("dataset: image '" + cameras[i].name +
                            "' does not match its camera dimensions");
    }
  }
  seed.validate();
}

namespace {

struct Intrinsics {
  int width, height;
  double fx, fy, cx, cy;
};

[[noreturn]] void parse_fail(const std::string& file, int line, const std::string& what) {
  throw ParseError(file + ":" + std::to_string(line) + ": " + what);
}

std::map<int, Intrinsics> parse_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing cameras file: " + path);
  std::map<int, Intrinsics> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int cam_id = 0;
    std::string model;
    Intrinsics intr{};
    if (!(ss >> cam_id >> model >> intr.width >> intr.height)) {
      parse_fail(path, line_no, "expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]");
    }
    if (model == "PINHOLE") {
      if (!(ss >> intr.fx >> intr.fy >> intr.cx >> intr.cy)) {
        parse_fail(path, line_no, "PINHOLE needs fx fy cx cy");
      }
    } else if (model == "SIMPLE_PINHOLE") {
      double f = 0;
      if (!(ss >> f >> intr.cx >> intr.cy)) {
        parse_fail(path, line_no, "SIMPLE_PINHOLE needs f cx cy");
      }
      intr.fx = intr.fy = f;
    } else {
      parse_fail(path, line_no,
                 "unsupported camera model '" + model +
                     "' (supported: PINHOLE, SIMPLE_PINHOLE)");
    }
    out[cam_id] = intr;
  }
  if (out.empty()) throw ParseError(path + ": no cameras found");
  return out;
}

struct ImagePose {
  Camera cam;  // pose + name; intrinsics filled from the camera table
  int camera_id;
};

std::vector<ImagePose> parse_images(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing images file: " + path);
  std::vector<ImagePose> out;
  std::string line;
  int line_no = 0;
  bool expect_points_line = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    if (expect_points_line) {  // 2D observations (possibly empty), ignored
      expect_points_line = false;
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long image_id = 0;
    double qw, qx, qy, qz, tx, ty, tz;
    int camera_id = 0;
    std::string name;
    if (!(ss >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name)) {
      parse_fail(path, line_no, "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    }
    ImagePose pose;
    pose.camera_id = camera_id;
    pose.cam.name = name;
    const Quat q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      parse_fail(path, line_no, "pose quaternion is not normalized");
    }
    pose.cam.rot = q.toRotationMatrix();
    pose.cam.trans = Vec3(tx, ty, tz);
    out.push_back(pose);
    expect_points_line = true;
  }
  if (out.empty()) throw ParseError(path + ": no images found");
  return out;
}

SparseSeed parse_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing points file: " + path);
  SparseSeed seed;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long point_id = 0;
    double x, y, z;
    int r, g, b;
    if (!(ss >> point_id >> x >> y >> z >> r >> g >> b)) {
      parse_fail(path, line_no, "expected POINT3D_ID X Y Z R G B ERROR TRACK[]");
    }
    seed.points.emplace_back(x, y, z);
    seed.colors.emplace_back(r / 255.0, g / 255.0, b / 255.0);
  }
  if (seed.points.empty()) throw ParseError(path + ": no points found");
  return seed;
}

std::string find_sparse_dir(const std::string& root) {
  for (const std::string sub : {"", "/sparse/0", "/sparse"}) {
    const std::string dir = root + sub;
    if (fs::exists(dir + "/cameras.txt")) return dir;
  }
  throw ValidationError("no cameras.txt under '" + root +
                        "' (tried ., sparse/0, sparse)");
}

}  // namespace

Dataset load_sfm(const std::string& path, double resolution_scale) {
  if (!fs::exists(path)) throw ValidationError("dataset path does not exist: " + path);
  const std::string sparse = find_sparse_dir(path);
  const auto intrinsics = parse_cameras(sparse + "/cameras.txt");
  auto poses = parse_images(sparse + "/images.txt");

  Dataset ds;
  ds.seed = parse_points(sparse + "/points3D.txt");

  const std::string image_dir = fs::exists(path + "/images")
                                    ? path + "/images"
                                    : path;
  for (ImagePose& pose : poses) {
    const auto it = intrinsics.find(pose.camera_id);
    if (it == intrinsics.end()) {
      throw ParseError("images.txt references unknown camera id " +
                       std::to_string(pose.camera_id));
    }
    Camera cam = pose.cam;
    cam.width = it->second.width;
    cam.height = it->second.height;
    cam.fx = it->second.fx;
    cam.fy = it->second.fy;
    cam.cx = it->second.cx;
    cam.cy = it->second.cy;
    if (resolution_scale != 1.0) cam = cam.scaled(resolution_scale);

    const std::string img_path = image_dir + "/" + cam.name;
    if (!fs::exists(img_path)) {
      throw ValidationError("missing image file: " + img_path);
    }
    ImageD img = read_raster(img_path);
    if (img.width != cam.width || img.height != cam.height) {
      img = resize_bilinear(img, cam.width, cam.height);
    }
    ds.cameras.push_back(cam);
    ds.images.push_back(std::move(img));
  }
  ds.validate();
  return ds;
}

void save_sfm(const std::string& dir, const Dataset& dataset) {
  fs::create_directories(dir + "/sparse/0");
  fs::create_directories(dir + "/images");

  {
    std::ofstream out(dir + "/sparse/0/cameras.txt");
    out << "# Camera list: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
    out.precision(17);
    for (std::size_t i = 0; i < dataset.cameras.size(); ++i) {
      const Camera& c = dataset.cameras[i];
      out << (i + 1) << " PINHOLE " << c.width << " " << c.height << " " << c.fx << " "
          << c.fy << " " << c.cx << " " << c.cy << "\n";
    }
  }
  {
    std::ofstream out(dir + "/sparse/0/images.txt");
    out << "# Image list: IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n";
    out.precision(17);
    for (std::size_t i = 0; i < dataset.cameras.size(); ++i) {
      const Camera& c = dataset.cameras[i];
      const Quat q(c.rot);
      out << (i + 1) << " " << q.w() << " " << q.x() << " " << q.y() << " " << q.z() << " "
          << c.trans[0] << " " << c.trans[1] << " " << c.trans[2] << " " << (i + 1) << " "
          << c.name << "\n";
      out << "\n";  // empty 2D-observation line
    }
  }
  {
    std::ofstream out(dir + "/sparse/0/points3D.txt");
    out << "# 3D point list: POINT3D_ID X Y Z R G B ERROR TRACK[]\n";
    out.precision(17);
    for (std::size_t i = 0; i < dataset.seed.points.size(); ++i) {
      const Vec3& p = dataset.seed.points[i];
      const Vec3& c = dataset.seed.colors[i];
      out << (i + 1) << " " << p[0] << " " << p[1] << " " << p[2] << " "
          << static_cast<int>(std::lround(c[0] * 255)) << " "
          << static_cast<int>(std::lround(c[1] * 255)) << " "
          << static_cast<int>(std::lround(c[2] * 255)) << " 0\n";
    }
  }
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    write_ppm(dir + "/images/" + dataset.cameras[i].name, dataset.images[i]);
  }
}

}  // namespace trisoup
