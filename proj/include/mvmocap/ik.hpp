#pragma once

#include <Eigen/Core>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mvmocap/error.hpp"
#include "mvmocap/kinematics.hpp"
#include "mvmocap/sequences.hpp"

namespace mvmocap {

class ScaleCalibrationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct IkOptions {
  // Temporal regularizer weight on ||q_t - q_{t-1}||^2 (rad^2), relative to
  // marker residuals measured in millimeters.
  double temporal_weight = 1e-2;
  double function_tolerance = 1e-8;  // relative cost decrease
  int max_iterations = 200;
  std::size_t max_calibration_frames = 50;
  std::size_t min_calibration_frames = 10;
  std::size_t min_markers_per_frame = 3;

  void check() const;
};

struct FramePose {
  RootPose root;
  Eigen::VectorXd q;
};

// Observations for one frame in model marker order. Weight 0 drops a marker.
struct FrameTargets {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> weights;
  std::size_t num_active() const;
};

FrameTargets make_frame_targets(const SkeletonModel& model, const Pose3DSequence& observed, std::size_t frame,
                                const std::map<std::string, double>& keypoint_weights = {});

// q = 0 with the root rigidly aligned to the observed pelvis markers (all
// markers when fewer than 3 pelvis markers are visible).
FramePose zero_pose_initialization(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets);

// sum w_k ||FK_k - y_k||^2 in mm^2, plus mu ||q - prior||^2 when a prior is given.
double frame_objective(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets,
                       const FramePose& pose, const Eigen::VectorXd* prior = nullptr, double mu = 0.0);

struct FrameFit {
  FramePose pose;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double rms_error_mm = std::numeric_limits<double>::quiet_NaN();
  std::size_t markers_used = 0;
  int iterations = 0;
  bool converged = false;
  bool carried = false;  // pose copied from the previous frame
  bool flagged() const { return carried || !converged; }
};

// Tracking fit of one frame with fixed scales, started from the better of
// `warm_start` (if given) and the zero-pose initialization.
FrameFit fit_frame(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets,
                   const FramePose* warm_start, const Eigen::VectorXd* prior, const IkOptions& options = {});

struct IkResult {
  ScaleSet scales;
  std::vector<FrameFit> frames;
  std::vector<std::size_t> calibration_frames;
  double calibration_rms_mm = std::numeric_limits<double>::quiet_NaN();
  std::size_t num_flagged() const;
};

// Stage 1 fits scales jointly with the poses of up to max_calibration_frames
// uniformly sampled frames. Stage 2 tracks every frame with scales fixed.
// Throws ScaleCalibrationError with fewer than min_calibration_frames frames
// that have min_markers_per_frame valid markers.
IkResult fit_pose_sequence(const SkeletonModel& model, const Pose3DSequence& observed,
                           const std::map<std::string, double>& keypoint_weights = {}, const IkOptions& options = {});

}  // namespace mvmocap
