#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvmocap/procrustes.hpp"
#include "mvmocap/sequences.hpp"

namespace mvmocap {

// A named keypoint subset. With `include` empty, every keypoint not in
// `exclude` is selected.
struct KeypointMask {
  std::string name = "all";
  std::vector<std::string> include;
  std::vector<std::string> exclude;

  std::vector<bool> apply(const std::vector<std::string>& keypoint_names) const;
};

// One (frame, camera, keypoint) reprojection sample.
struct ErrorSample {
  double error_px = 0.0;
  double confidence = 0.0;
  std::size_t frame = 0;
  std::size_t camera = 0;
  std::size_t keypoint = 0;
};

// Pairs detected and reprojected points by camera id. Samples where either
// side is missing (confidence 0, invalid 3D point, behind camera) or the
// keypoint is masked out are skipped.
std::vector<ErrorSample> collect_error_samples(const std::vector<DetectionSequence>& detected,
                                               const std::vector<ReprojectionSequence>& reprojected,
                                               const std::vector<bool>& keypoint_mask = {});

struct ReprojectionErrorResult {
  std::vector<std::string> keypoint_names;
  std::vector<std::optional<double>> per_keypoint;  // pixels; nullopt when undefined or masked out
  std::vector<std::size_t> sample_counts;
  std::optional<double> mean;  // mean of defined masked per-keypoint values
  std::size_t total_samples = 0;
  std::size_t missing_samples = 0;
};

// Per keypoint: mean over frames within each camera, then mean over cameras.
ReprojectionErrorResult reprojection_error(const std::vector<DetectionSequence>& detected,
                                           const std::vector<ReprojectionSequence>& reprojected,
                                           const std::vector<bool>& keypoint_mask = {});

enum class GcAggregation { kPooled, kPerCameraMean };

// Fraction of samples with error < d among samples with confidence > lambda.
std::optional<double> geometric_consistency(std::span<const double> errors_px, std::span<const double> confidences,
                                            double d, double lambda);
std::optional<double> geometric_consistency(std::span<const ErrorSample> samples, double d, double lambda,
                                            GcAggregation aggregation = GcAggregation::kPooled);

struct PositionErrorResult {
  std::vector<std::string> keypoint_names;          // shared names, reference order
  std::vector<std::optional<double>> per_keypoint;  // millimeters
  std::optional<double> mean;                       // millimeters
  std::size_t frames_used = 0;
  std::size_t frames_excluded = 0;
};

// Per frame: similarity-align the monocular keypoints to the reference over
// the jointly valid masked keypoints, then measure Euclidean distances.
PositionErrorResult position_error(const Pose3DSequence& monocular, const Pose3DSequence& reference,
                                   const KeypointMask& mask = {}, const ProcrustesOptions& options = {});

struct GcKey {
  double d = 0.0;
  double lambda = 0.0;
  auto operator<=>(const GcKey&) const = default;
};

struct KeypointMetrics {
  std::string name;
  std::optional<double> reprojection_error_px;
  std::map<GcKey, std::optional<double>> gc;
  std::optional<double> position_error_mm;
};

struct MetricReport {
  std::string session_id;
  std::string trial_id;
  std::string method;
  std::optional<double> mean_reprojection_error_px;
  std::map<GcKey, std::optional<double>> gc;
  std::optional<double> mean_position_error_mm;
  std::vector<KeypointMetrics> per_keypoint;  // masked keypoints only
  std::size_t n_frames = 0;
  std::size_t n_cameras = 0;
  std::size_t n_samples = 0;
};

struct MetricOptions {
  std::vector<double> gc_thresholds_px{5.0, 10.0};
  double confidence_lambda = 0.5;
  GcAggregation gc_aggregation = GcAggregation::kPooled;
  KeypointMask mask;

  void check() const;
};

MetricReport compute_metric_report(const std::vector<DetectionSequence>& detected,
                                   const std::vector<ReprojectionSequence>& reprojected,
                                   const MetricOptions& options,
                                   const std::optional<PositionErrorResult>& position = std::nullopt);

}  // namespace mvmocap
