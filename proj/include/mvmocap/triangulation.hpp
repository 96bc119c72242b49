#pragma once

#include <Eigen/Core>
#include <vector>

#include "mvmocap/camera.hpp"
#include "mvmocap/sequences.hpp"

namespace mvmocap {

struct TriangulationOptions {
  int max_iterations = 10;
  // Stop when no normalized view weight changes by more than this.
  double weight_tolerance = 1e-6;
  // Huber threshold in units of the robust residual scale. Small values
  // approach an L1 fit so gross outliers fall under the exclusion ratio.
  double huber_threshold = 0.3;
  double mad_to_sigma = 1.4826;
  double min_sigma_px = 1.0;
  // Views whose final weight is below this fraction of the largest weight
  // are excluded from the final solve and from effective_views.
  double exclusion_ratio = 0.01;
  // Design matrix smallest/largest singular value ratio above which the
  // geometry is treated as degenerate.
  double degenerate_singular_ratio = 0.99;
  // Rank check on the non-null part of the design matrix.
  double rank_tolerance = 1e-10;
  // Worker threads for robust_triangulate; results do not depend on it.
  int workers = 1;

  void check() const;
};

struct Observation {
  const CameraParams* camera = nullptr;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double confidence = 0.0;
};

struct TriangulatedPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  // One entry per input observation; 0 for ignored or excluded views.
  std::vector<double> weights;
  bool valid = false;
  bool degenerate = false;
  int effective_views = 0;
  int iterations = 0;
};

// Confidence-weighted DLT on undistorted normalized rays followed by Huber
// IRLS on pixel reprojection residuals with a MAD scale estimate.
// Failure modes are reported through valid/degenerate, never thrown.
TriangulatedPoint triangulate_point(const std::vector<Observation>& observations,
                                    const TriangulationOptions& options = {});

// Per-point diagnostics of robust_triangulate, frame-major then keypoint,
// with one weight per rig camera.
struct TriangulationDiagnostics {
  std::vector<std::string> camera_ids;
  std::vector<std::string> keypoint_names;
  std::size_t num_frames = 0;
  std::vector<double> weights;
  std::vector<char> degenerate;

  double weight(std::size_t frame, std::size_t keypoint, std::size_t camera) const {
    return weights[(frame * keypoint_names.size() + keypoint) * camera_ids.size() + camera];
  }
};

// Triangulates every frame x keypoint independently. Detections are matched
// to rig cameras by id. Throws ValidationError on inconsistent inputs.
Pose3DSequence robust_triangulate(const std::vector<DetectionSequence>& detections, const CameraRig& rig,
                                  const TriangulationOptions& options = {},
                                  TriangulationDiagnostics* diagnostics = nullptr);

// Projects valid points into every rig camera.
std::vector<ReprojectionSequence> reproject(const Pose3DSequence& pose, const CameraRig& rig);

std::string format_triangulation_diagnostics(const TriangulationDiagnostics& diag);

}  // namespace mvmocap
