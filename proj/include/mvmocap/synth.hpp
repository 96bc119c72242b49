#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvmocap/camera.hpp"
#include "mvmocap/ik.hpp"
#include "mvmocap/sequences.hpp"
#include "mvmocap/skeleton.hpp"
#include "mvmocap/trajectory.hpp"

namespace mvmocap {

struct ConfidenceModel {
  double high_min = 0.7;
  double high_max = 1.0;
  double low_min = 0.0;
  double low_max = 0.3;
  double offset_min_px = 20.0;  // occluded entries are displaced by this much or more
  double offset_max_px = 80.0;
};

struct SceneSpec {
  std::size_t n_cameras = 8;
  double ring_radius_m = 1.2;
  double camera_height_m = 1.0;
  Eigen::Vector3d target = Eigen::Vector3d(0.0, 0.0, 0.1);
  double pixel_noise_px = 0.0;
  double occlusion_rate = 0.0;
  ConfidenceModel confidence;
  std::uint64_t seed = 0;
  std::size_t duration_frames = 300;
  double frame_rate = 29.0;
  double focal_px = 1400.0;
  int image_width = 1440;
  int image_height = 1080;
  Distortion distortion;

  void validate() const;  // throws ValidationError
};

// Evenly spaced cameras on a horizontal circle around the target, each
// looking at it. Camera ids are cam00, cam01, ...
CameraRig make_camera_ring(const SceneSpec& spec);

enum class MotionTemplate { kRandom, kStatic, kIsolatedKneeFlexion, kMirroredKneeExtension };
std::optional<MotionTemplate> motion_template_from_name(const std::string& name);
std::string motion_template_name(MotionTemplate t);

struct MotionOptions {
  MotionTemplate motion = MotionTemplate::kRandom;
  double frame_rate = 29.0;
  Eigen::Vector3d target = Eigen::Vector3d(0.0, 0.0, 0.1);
  bool randomize_scales = true;  // group and overall scales drawn from [0.9, 1.1]
  double max_frequency_hz = 1.5;
  std::size_t template_half_period_frames = 36;  // frames between template extrema
};

// A scripted knee movement between two template extrema (inclusive).
struct ScriptedSpan {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  int direction = 0;
  KneeEventLabel label = KneeEventLabel::kOther;
};

struct GroundTruthMotion {
  ScaleSet scales;
  std::vector<FramePose> poses;
  Pose3DSequence markers;  // every model marker, all valid
  std::vector<ScriptedSpan> scripted;
};

// Random motion: per degree of freedom, up to 3 sinusoids around a resting
// infant posture, kept inside the joint limits. Templates hold every other
// angle still. The infant lies supine with the head toward +x.
GroundTruthMotion generate_motion(const SkeletonModel& model, std::uint64_t seed, std::size_t duration_frames,
                                  const MotionOptions& options = {});

// One detection sequence per camera, in rig order. Noise, occlusion and
// confidences are drawn from per-camera streams derived from spec.seed.
std::vector<DetectionSequence> render_detections(const Pose3DSequence& markers, const CameraRig& rig,
                                                 const SceneSpec& spec);

// Stand-in for a monocular 3D estimator: markers expressed in the front
// camera frame, centred per frame, multiplied by `scale` and perturbed by
// isotropic Gaussian noise of noise_mm per axis.
Pose3DSequence simulate_monocular_estimate(const Pose3DSequence& markers, const CameraParams& front, double scale,
                                           double noise_mm, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mvmocap
