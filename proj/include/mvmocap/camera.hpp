#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvmocap {

// Brown-Conrady coefficients in OpenCV order.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double k3 = 0.0;

  bool is_zero() const {
    return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0 && k3 == 0.0;
  }
};

// A calibrated pinhole camera. Extrinsics map world to camera coordinates:
// x_cam = rotation * x_world + translation (meters).
struct CameraParams {
  std::string camera_id;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;
  Distortion distortion;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  Eigen::Matrix3d intrinsic_matrix() const;

  // Throws ValidationError when fx/fy are not positive or the rotation is
  // not a proper rotation to 1e-9.
  void validate() const;
};

struct CameraRig {
  std::vector<CameraParams> cameras;
  double frame_rate = 29.0;

  std::size_t size() const { return cameras.size(); }
  // Index of the camera with the given id, or nullopt.
  std::optional<std::size_t> find(const std::string& camera_id) const;
  const CameraParams& at(const std::string& camera_id) const;

  // Unique ids and valid cameras.
  void validate() const;
  // validate() plus at least two cameras.
  void validate_for_triangulation() const;
};

// Normalized (pre-intrinsics) image coordinates through the distortion model.
Eigen::Vector2d distort_normalized(const Eigen::Vector2d& xy, const Distortion& d);
// Inverse of distort_normalized via Gauss-Newton; exact for zero distortion.
Eigen::Vector2d undistort_normalized(const Eigen::Vector2d& xy_distorted, const Distortion& d);

// Pixel coordinates to undistorted normalized coordinates.
Eigen::Vector2d pixel_to_normalized(const Eigen::Vector2d& pixel, const CameraParams& cam);
Eigen::Vector2d normalized_to_pixel(const Eigen::Vector2d& xy_distorted, const CameraParams& cam);

// The projection function: world point (m) -> pixel. Throws
// BehindCameraError when the camera-frame depth is not positive.
Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraParams& cam);
std::optional<Eigen::Vector2d> try_project(const Eigen::Vector3d& point, const CameraParams& cam);

// Back-projects a pixel to the world point at the given camera-frame depth.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const CameraParams& cam);

// Axis-angle (Rodrigues) vector to rotation matrix and back.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle);
Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d& rotation);
// Closest proper rotation in Frobenius norm.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

// Calibration files are JSON documents:
//   {
//     "frame_rate": 29.0,
//     "cameras": [
//       { "id": "cam00",
//         "K": [fx, skew, cx, 0, fy, cy, 0, 0, 1],
//         "distortion": [k1, k2, p1, p2, k3],
//         "rotation": [r00, r01, ..., r22]  or  [rx, ry, rz] (axis-angle),
//         "translation": [tx, ty, tz] }, ... ] }
//
// Rotations whose orthonormality error ||R^T R - I||_F exceeds 1e-6 are
// projected onto SO(3) with a warning; beyond 1e-3, or with negative
// determinant, the file is rejected.
struct CalibrationLoadOptions {
  double reorthonormalize_tolerance = 1e-6;
  double reject_tolerance = 1e-3;
};

CameraRig load_calibration(const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr,
                           const CalibrationLoadOptions& options = {});
CameraRig parse_calibration(const std::string& text,
                            std::vector<std::string>* warnings = nullptr,
                            const CalibrationLoadOptions& options = {});
std::string format_calibration(const CameraRig& rig);
void save_calibration(const CameraRig& rig, const std::filesystem::path& path);

}  // namespace mvmocap
