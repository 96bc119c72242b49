#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvmocap/ik.hpp"
#include "mvmocap/manifest.hpp"
#include "mvmocap/metrics.hpp"
#include "mvmocap/report.hpp"
#include "mvmocap/stats.hpp"
#include "mvmocap/synth.hpp"
#include "mvmocap/trajectory.hpp"
#include "mvmocap/triangulation.hpp"

namespace mvmocap {

// Every command validates all of its inputs before writing anything.

struct SimulatedMethod {
  std::string name = "synthetic";
  std::optional<double> noise_px;          // defaults to the scene's pixel noise
  std::optional<double> monocular_noise_mm;  // emit a monocular estimate when set
};

struct SimulateConfig {
  SceneSpec scene;
  MotionTemplate motion = MotionTemplate::kRandom;
  bool randomize_scales = true;
  std::vector<SimulatedMethod> methods{SimulatedMethod{}};
  std::vector<std::string> keypoints;  // subset of model markers; empty keeps all
  std::filesystem::path model_path;    // empty selects the bundled model
  std::filesystem::path output_dir;
  std::string session_id = "session01";
  std::string trial_id = "trial01";
};

// Layout under output_dir:
//   manifest.json, calibration.json, scene.json,
//   detections/<method>/<camera>.csv, monocular/<method>.csv,
//   truth/markers3d.csv, truth/joint_angles.csv, truth/scales.json, truth/scripted_spans.csv
void cmd_simulate(const SimulateConfig& config);

struct TriangulateConfig {
  std::filesystem::path manifest;
  std::string method;                // may be empty when the manifest has one method
  std::filesystem::path output_dir;  // default: <manifest dir>/triangulated/<method>
  TriangulationOptions triangulation;
};

struct TriangulateResult {
  Pose3DSequence pose;
  std::filesystem::path pose_path;
  std::filesystem::path diagnostics_path;
};

TriangulateResult cmd_triangulate(const TriangulateConfig& config);

enum class StatUnit { kTrial, kSession };

struct EvaluateConfig {
  std::vector<std::filesystem::path> manifests;  // files, or directories searched for manifest.json
  std::vector<std::string> methods;              // empty: every method found
  MetricOptions metrics;
  std::optional<KeypointMask> mask_override;     // otherwise each manifest's mask
  stats::StatOptions stats;
  StatUnit unit = StatUnit::kTrial;
  std::optional<std::string> front_camera;  // overrides the manifests
  TriangulationOptions triangulation;
  std::size_t workers = 1;
  std::filesystem::path output_dir;
};

struct EvaluateResult {
  std::vector<MetricReport> reports;  // ordered by manifest, then method
  std::vector<stats::StatReport> stats;
  Table1 table;
};

// Writes metrics.json, metrics.tsv, per_keypoint.tsv, table1.tsv,
// stats.tsv and stats.json.
EvaluateResult cmd_evaluate(const EvaluateConfig& config);

struct IkfitConfig {
  std::optional<std::filesystem::path> manifest;
  std::string method;
  std::optional<std::filesystem::path> pose3d;
  std::filesystem::path model_path;  // empty selects the bundled model
  std::filesystem::path output_dir;
  std::optional<double> frame_rate;  // default: calibration frame rate, else 29
  std::vector<std::string> angles;   // trajectory columns; empty writes every angle
  IkOptions ik;
  KneeEventParams events;
  SmoothingOptions smoothing;
  TriangulationOptions triangulation;
};

struct IkfitResult {
  IkResult fit;
  JointTrajectory trajectory;
  std::vector<KneeEvent> events;
};

// Writes scales.json, trajectory.csv, events.csv and fit_residuals.csv.
IkfitResult cmd_ikfit(const IkfitConfig& config);

std::vector<std::filesystem::path> expand_manifest_paths(const std::vector<std::filesystem::path>& inputs);

}  // namespace mvmocap
