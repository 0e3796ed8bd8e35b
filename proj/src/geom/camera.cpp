#include "trisoup/geom/camera.hpp"

#include "trisoup/core/error.hpp"

namespace trisoup {

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError("camera has empty image plane");
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera focal lengths must be positive");
  const Mat3 should_be_identity = rot * rot.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError("camera rotation is not orthonormal");
  }
  if (!rot.allFinite() || !trans.allFinite()) {
    throw ValidationError("camera pose contains non-finite values");
  }
}

Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width,
                          int height, double focal) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;

  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up).normalized();
  if (!x.allFinite() || x.norm() < 0.5) x = z.cross(Vec3(0, 1, 0)).normalized();
  const Vec3 y = z.cross(x);
  Mat3 cam_to_world;
  cam_to_world.col(0) = x;
  cam_to_world.col(1) = y;
  cam_to_world.col(2) = z;
  cam.rot = cam_to_world.transpose();
  cam.trans = -(cam.rot * eye);
  return cam;
}

}  // namespace trisoup
