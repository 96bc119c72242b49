#include "mvmocap/camera.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <json.hpp>
#include <set>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

using json = nlohmann::json;

double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
}

// Jacobian of distort_normalized with respect to (x, y).
Eigen::Matrix2d distortion_jacobian(const Eigen::Vector2d& xy, const Distortion& d) {
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  const double dradial_dr2 = d.k1 + r2 * (2.0 * d.k2 + 3.0 * r2 * d.k3);
  Eigen::Matrix2d j;
  j(0, 0) = radial + 2.0 * x * x * dradial_dr2 + 2.0 * d.p1 * y + 6.0 * d.p2 * x;
  j(0, 1) = 2.0 * x * y * dradial_dr2 + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 0) = 2.0 * x * y * dradial_dr2 + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 1) = radial + 2.0 * y * y * dradial_dr2 + 6.0 * d.p1 * y + 2.0 * d.p2 * x;
  return j;
}

std::vector<double> number_array(const json& node, std::string_view what, const std::string& cam) {
  if (!node.is_array()) {
    throw ValidationError("calibration camera '" + cam + "': '" + std::string(what) + "' must be an array");
  }
  std::vector<double> out;
  for (const auto& v : node) {
    if (!v.is_number()) {
      throw ValidationError("calibration camera '" + cam + "': '" + std::string(what) + "' has non-numeric entry");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Eigen::Matrix3d CameraParams::intrinsic_matrix() const {
  Eigen::Matrix3d k;
  k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void CameraParams::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ValidationError("camera '" + camera_id + "': focal lengths must be positive");
  }
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("camera '" + camera_id + "': non-finite extrinsics");
  }
  if (rotation.determinant() <= 0.0 || orthonormality_error(rotation) > 1e-9) {
    throw ValidationError("camera '" + camera_id + "': rotation is not orthonormal with determinant +1");
  }
}

std::optional<std::size_t> CameraRig::find(const std::string& camera_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].camera_id == camera_id) return i;
  }
  return std::nullopt;
}

const CameraParams& CameraRig::at(const std::string& camera_id) const {
  const auto idx = find(camera_id);
  if (!idx) throw ValidationError("camera '" + camera_id + "' is not in the rig");
  return cameras[*idx];
}

void CameraRig::validate() const {
  std::set<std::string> ids;
  for (const auto& cam : cameras) {
    if (!ids.insert(cam.camera_id).second) {
      throw ValidationError("duplicate camera id '" + cam.camera_id + "'");
    }
    cam.validate();
  }
  if (!(frame_rate > 0.0)) throw ValidationError("rig frame_rate must be positive");
}

void CameraRig::validate_for_triangulation() const {
  validate();
  if (cameras.size() < 2) {
    throw ValidationError("triangulation needs at least 2 cameras, rig has " +
                          std::to_string(cameras.size()));
  }
}

Eigen::Vector2d distort_normalized(const Eigen::Vector2d& xy, const Distortion& d) {
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  return {x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
          y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y};
}

Eigen::Vector2d undistort_normalized(const Eigen::Vector2d& xy_distorted, const Distortion& d) {
  if (d.is_zero()) return xy_distorted;
  Eigen::Vector2d xy = xy_distorted;
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::Vector2d residual = distort_normalized(xy, d) - xy_distorted;
    if (residual.norm() < 1e-15) break;
    const Eigen::Vector2d step = distortion_jacobian(xy, d).partialPivLu().solve(residual);
    xy -= step;
    if (step.norm() < 1e-16) break;
  }
  return xy;
}

Eigen::Vector2d pixel_to_normalized(const Eigen::Vector2d& pixel, const CameraParams& cam) {
  const double yd = (pixel.y() - cam.cy) / cam.fy;
  const double xd = (pixel.x() - cam.cx - cam.skew * yd) / cam.fx;
  return undistort_normalized({xd, yd}, cam.distortion);
}

Eigen::Vector2d normalized_to_pixel(const Eigen::Vector2d& xy_distorted, const CameraParams& cam) {
  return {cam.fx * xy_distorted.x() + cam.skew * xy_distorted.y() + cam.cx,
          cam.fy * xy_distorted.y() + cam.cy};
}

std::optional<Eigen::Vector2d> try_project(const Eigen::Vector3d& point, const CameraParams& cam) {
  const Eigen::Vector3d pc = cam.to_camera(point);
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Eigen::Vector2d xy(pc.x() / pc.z(), pc.y() / pc.z());
  return normalized_to_pixel(distort_normalized(xy, cam.distortion), cam);
}

Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraParams& cam) {
  auto uv = try_project(point, cam);
  if (!uv) throw BehindCameraError("point is behind camera '" + cam.camera_id + "'");
  return *uv;
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const CameraParams& cam) {
  const Eigen::Vector2d xy = pixel_to_normalized(pixel, cam);
  const Eigen::Vector3d pc(xy.x() * depth, xy.y() * depth, depth);
  return cam.rotation.transpose() * (pc - cam.translation);
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.axis() * aa.angle();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

CameraRig parse_calibration(const std::string& text, std::vector<std::string>* warnings,
                            const CalibrationLoadOptions& options) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("calibration parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("cameras") || !doc["cameras"].is_array()) {
    throw ValidationError("calibration must be an object with a 'cameras' array");
  }

  CameraRig rig;
  if (doc.contains("frame_rate")) {
    if (!doc["frame_rate"].is_number()) throw ValidationError("calibration 'frame_rate' must be a number");
    rig.frame_rate = doc["frame_rate"].get<double>();
  }

  for (const auto& node : doc["cameras"]) {
    if (!node.is_object() || !node.contains("id") || !node["id"].is_string()) {
      throw ValidationError("calibration camera entry needs a string 'id'");
    }
    CameraParams cam;
    cam.camera_id = node["id"].get<std::string>();
    for (const char* key : {"K", "rotation", "translation"}) {
      if (!node.contains(key)) {
        throw ValidationError("calibration camera '" + cam.camera_id + "': missing '" + key + "'");
      }
    }

    const auto k = number_array(node["K"], "K", cam.camera_id);
    if (k.size() != 9) throw ValidationError("calibration camera '" + cam.camera_id + "': K needs 9 values");
    if (k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0) {
      throw ValidationError("calibration camera '" + cam.camera_id + "': K must be upper triangular with K[2][2] = 1");
    }
    cam.fx = k[0];
    cam.skew = k[1];
    cam.cx = k[2];
    cam.fy = k[4];
    cam.cy = k[5];

    if (node.contains("distortion")) {
      const auto d = number_array(node["distortion"], "distortion", cam.camera_id);
      if (d.size() != 5) {
        throw ValidationError("calibration camera '" + cam.camera_id + "': distortion needs 5 coefficients");
      }
      cam.distortion = {d[0], d[1], d[2], d[3], d[4]};
    }

    const auto r = number_array(node["rotation"], "rotation", cam.camera_id);
    if (r.size() == 3) {
      cam.rotation = rotation_from_axis_angle({r[0], r[1], r[2]});
    } else if (r.size() == 9) {
      cam.rotation << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
      const double err = orthonormality_error(cam.rotation);
      if (cam.rotation.determinant() <= 0.0 || err > options.reject_tolerance) {
        throw ValidationError("calibration camera '" + cam.camera_id +
                              "': rotation is not orthonormal with determinant +1 (error " +
                              detail::format_double(err) + ")");
      }
      if (err > options.reorthonormalize_tolerance) {
        cam.rotation = nearest_rotation(cam.rotation);
        if (warnings) {
          warnings->push_back("camera '" + cam.camera_id +
                              "': rotation re-orthonormalized (error " + detail::format_double(err) + ")");
        }
      } else if (err > 1e-9) {
        cam.rotation = nearest_rotation(cam.rotation);
      }
    } else {
      throw ValidationError("calibration camera '" + cam.camera_id +
                            "': rotation needs 9 (matrix) or 3 (axis-angle) values");
    }

    const auto t = number_array(node["translation"], "translation", cam.camera_id);
    if (t.size() != 3) {
      throw ValidationError("calibration camera '" + cam.camera_id + "': translation needs 3 values");
    }
    cam.translation = {t[0], t[1], t[2]};
    rig.cameras.push_back(std::move(cam));
  }
  rig.validate();
  return rig;
}

CameraRig load_calibration(const std::filesystem::path& path, std::vector<std::string>* warnings,
                           const CalibrationLoadOptions& options) {
  try {
    return parse_calibration(detail::read_file(path), warnings, options);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_calibration(const CameraRig& rig) {
  json doc;
  doc["frame_rate"] = rig.frame_rate;
  doc["cameras"] = json::array();
  for (const auto& cam : rig.cameras) {
    json node;
    node["id"] = cam.camera_id;
    node["K"] = {cam.fx, cam.skew, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0};
    node["distortion"] = {cam.distortion.k1, cam.distortion.k2, cam.distortion.p1, cam.distortion.p2,
                          cam.distortion.k3};
    json rot = json::array();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rot.push_back(cam.rotation(i, j));
    node["rotation"] = rot;
    node["translation"] = {cam.translation.x(), cam.translation.y(), cam.translation.z()};
    doc["cameras"].push_back(node);
  }
  return doc.dump(2) + "\n";
}

void save_calibration(const CameraRig& rig, const std::filesystem::path& path) {
  detail::write_file(path, format_calibration(rig));
}

}  // namespace mvmocap
