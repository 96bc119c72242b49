#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvmocap {

struct Detection2D {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;  // 0 means "not detected"
};

// 2D keypoints from one camera, stored frame-major.
struct DetectionSequence {
  std::string camera_id;
  std::vector<std::string> keypoint_names;
  std::size_t num_frames = 0;
  std::vector<Detection2D> points;

  std::size_t num_keypoints() const { return keypoint_names.size(); }
  Detection2D& at(std::size_t frame, std::size_t keypoint) {
    return points[frame * keypoint_names.size() + keypoint];
  }
  const Detection2D& at(std::size_t frame, std::size_t keypoint) const {
    return points[frame * keypoint_names.size() + keypoint];
  }
  void resize(std::size_t frames);
  // Confidence in [0, 1], consistent sizes. Throws ValidationError.
  void validate() const;
};

struct Point3D {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool valid = false;
  int effective_views = 0;
};

struct Pose3DSequence {
  std::vector<std::string> keypoint_names;
  std::size_t num_frames = 0;
  std::vector<Point3D> points;

  std::size_t num_keypoints() const { return keypoint_names.size(); }
  Point3D& at(std::size_t frame, std::size_t keypoint) {
    return points[frame * keypoint_names.size() + keypoint];
  }
  const Point3D& at(std::size_t frame, std::size_t keypoint) const {
    return points[frame * keypoint_names.size() + keypoint];
  }
  void resize(std::size_t frames);
  std::optional<std::size_t> keypoint_index(const std::string& name) const;
  void validate() const;
};

// Reprojected 2D points; entries are missing where the 3D point is invalid
// or behind the camera.
struct ReprojectionSequence {
  std::string camera_id;
  std::vector<std::string> keypoint_names;
  std::size_t num_frames = 0;
  std::vector<std::optional<Eigen::Vector2d>> points;

  const std::optional<Eigen::Vector2d>& at(std::size_t frame, std::size_t keypoint) const {
    return points[frame * keypoint_names.size() + keypoint];
  }
  std::optional<Eigen::Vector2d>& at(std::size_t frame, std::size_t keypoint) {
    return points[frame * keypoint_names.size() + keypoint];
  }
};

// Keeps only the named keypoints, in the given order.
Pose3DSequence select_keypoints(const Pose3DSequence& pose, const std::vector<std::string>& names);
DetectionSequence select_keypoints(const DetectionSequence& det, const std::vector<std::string>& names);

// Detections file (CSV):
//   # camera_id: <id>
//   frame,<kp>_u,<kp>_v,<kp>_c,...
//   0,<u>,<v>,<c>,...
// Pose3D file (CSV), meters:
//   frame,<kp>_x,<kp>_y,<kp>_z,<kp>_valid,...
// Numbers are written in shortest round-trip form.
std::string format_detections(const DetectionSequence& det);
DetectionSequence parse_detections(const std::string& text, const std::string& origin = "detections");
DetectionSequence load_detections(const std::filesystem::path& path);
void save_detections(const DetectionSequence& det, const std::filesystem::path& path);

std::string format_pose3d(const Pose3DSequence& pose);
Pose3DSequence parse_pose3d(const std::string& text, const std::string& origin = "pose3d");
Pose3DSequence load_pose3d(const std::filesystem::path& path);
void save_pose3d(const Pose3DSequence& pose, const std::filesystem::path& path);

}  // namespace mvmocap
