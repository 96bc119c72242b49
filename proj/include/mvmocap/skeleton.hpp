#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvmocap {

enum class ScaleGroup { kHead, kTorso, kUpperLeg, kLowerLeg, kFoot, kUpperArm, kForearm, kHand, kNone };

inline constexpr std::size_t kNumScaleGroups = 8;
inline constexpr std::array<const char*, kNumScaleGroups> kScaleGroupNames{
    "head", "torso", "upper_leg", "lower_leg", "foot", "upper_arm", "forearm", "hand"};

std::optional<ScaleGroup> scale_group_from_name(const std::string& name);
std::string scale_group_name(ScaleGroup group);

// One rotational degree of freedom: a unit axis in the joint frame and
// limits in radians. Rotations of a joint compose in listed order.
struct JointAxis {
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double lower = 0.0;
  double upper = 0.0;
};

struct Segment {
  std::string name;
  int parent = -1;  // index into SkeletonModel::segments; -1 for the root
  // Joint position in the parent frame at unit scale. Scaled by the parent
  // segment's group scale since it is the parent's geometry.
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  ScaleGroup scale_group = ScaleGroup::kNone;
  std::vector<JointAxis> axes;
  std::size_t first_dof = 0;  // index of axes[0] in the joint-angle vector
};

struct Marker {
  std::string name;
  int segment = 0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // segment frame, unit scale
};

// Group scales multiply the overall scale. Segments in ScaleGroup::kNone
// (the pelvis in the bundled model) follow the overall scale alone.
struct ScaleSet {
  std::array<double, kNumScaleGroups> group{1, 1, 1, 1, 1, 1, 1, 1};
  double overall = 1.0;

  static constexpr double kLower = 0.3;
  static constexpr double kUpper = 3.0;

  double effective(ScaleGroup g) const {
    return g == ScaleGroup::kNone ? overall : overall * group[static_cast<std::size_t>(g)];
  }
  bool within_bounds() const;
  void clamp_to_bounds();
};

struct SkeletonModel {
  std::string name;
  std::vector<Segment> segments;  // parents precede children
  std::vector<Marker> markers;
  std::size_t num_dofs = 0;
  // Distance from each non-root segment's joint to its parent joint.
  std::map<std::string, double> nominal_lengths() const;

  int segment_index(const std::string& name) const;  // -1 when absent
  std::optional<std::size_t> marker_index(const std::string& name) const;
  std::optional<std::size_t> dof_index(const std::string& name) const;
  std::vector<std::string> dof_names() const;
  std::vector<std::string> marker_names() const;
  const JointAxis& dof(std::size_t index) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;

  // Single root, parents before children, unique names, valid limits,
  // markers on existing segments, left/right segment pairs sharing a group.
  void validate() const;
};

// Skeleton model file (JSON). Angles in degrees, lengths in meters:
//   { "name": "...",
//     "segments": [ { "name": "pelvis", "parent": null, "offset": [0,0,0],
//                     "scale_group": "none",
//                     "dofs": [ { "name": "left_knee_flexion", "axis": [0,1,0],
//                                 "limits_deg": [0, 150] } ] }, ... ],
//     "markers": [ { "name": "left_knee_lat", "segment": "left_upper_leg",
//                    "offset": [0, 0.025, -0.1] }, ... ] }
SkeletonModel parse_skeleton_model(const std::string& text);
SkeletonModel load_skeleton_model(const std::filesystem::path& path);

// Path of the bundled infant model.
std::filesystem::path default_skeleton_model_path();

}  // namespace mvmocap
