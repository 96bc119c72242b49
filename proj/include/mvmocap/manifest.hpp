#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvmocap/camera.hpp"
#include "mvmocap/metrics.hpp"

namespace mvmocap {

struct MethodEntry {
  std::string name;
  std::map<std::string, std::filesystem::path> detections;  // camera id -> file
  std::optional<std::filesystem::path> monocular_3d;
};

// One trial. Relative paths resolve against base_dir, the manifest's folder.
//
//   { "session_id": "s01", "trial_id": "t01",
//     "calibration": "calibration.json",
//     "front_camera": "cam00",
//     "keypoint_mask": { "name": "non_facial", "exclude": ["nose", ...] },
//     "methods": { "<name>": { "detections": { "cam00": "detections/<name>/cam00.csv", ... },
//                              "monocular_3d": "monocular/<name>.csv" } } }
//
// A mask named "non_facial" without lists excludes the default facial set.
struct TrialManifest {
  std::string session_id;
  std::string trial_id;
  std::filesystem::path calibration;
  std::vector<MethodEntry> methods;  // sorted by name
  KeypointMask keypoint_mask;
  std::optional<std::string> front_camera;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const MethodEntry& method(const std::string& name) const;  // throws ValidationError
  bool wants_position_error() const;

  // Referenced files exist, detection cameras are in the rig, and a front
  // camera from the rig is named when any method has monocular estimates.
  void validate(const CameraRig& rig) const;
};

const std::vector<std::string>& default_facial_keypoints();

TrialManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                             const std::string& origin = "manifest");
TrialManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const TrialManifest& manifest);
void save_manifest(const TrialManifest& manifest, const std::filesystem::path& path);

}  // namespace mvmocap
