#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "mvmocap/camera.hpp"
#include "mvmocap/ik.hpp"
#include "mvmocap/synth.hpp"
#include "test_support.hpp"

using namespace mvmocap;

namespace {

const SkeletonModel& model() {
  static const SkeletonModel m = load_skeleton_model(default_skeleton_model_path());
  return m;
}

Pose3DSequence add_noise(Pose3DSequence pose, double sigma_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma_m);
  for (auto& p : pose.points) p.position += Eigen::Vector3d(n(rng), n(rng), n(rng));
  return pose;
}

double knee_rmse_deg(const GroundTruthMotion& truth, const IkResult& fit) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const char* name : {"left_knee_flexion", "right_knee_flexion"}) {
    const auto d = *model().dof_index(name);
    for (std::size_t f = 0; f < fit.frames.size(); ++f) {
      const double e = (fit.frames[f].pose.q(d) - truth.poses[f].q(d)) * 180.0 / M_PI;
      sum += e * e;
      ++count;
    }
  }
  return std::sqrt(sum / static_cast<double>(count));
}

double worst_scale_error(const ScaleSet& truth, const ScaleSet& fit) {
  double worst = std::abs(fit.overall / truth.overall - 1.0);
  for (std::size_t g = 0; g < kNumScaleGroups; ++g) {
    const auto group = static_cast<ScaleGroup>(g);
    worst = std::max(worst, std::abs(fit.effective(group) / truth.effective(group) - 1.0));
  }
  return worst;
}

}  // namespace

TEST(InverseKinematics, NoiselessRecovery) {
  const auto truth = generate_motion(model(), 11, 100);
  const auto fit = fit_pose_sequence(model(), truth.markers);
  EXPECT_LT(knee_rmse_deg(truth, fit), 0.5);
  EXPECT_LT(worst_scale_error(truth.scales, fit.scales), 0.01);
  EXPECT_EQ(fit.num_flagged(), 0u);
  EXPECT_LT(fit.calibration_rms_mm, 0.1);
}

TEST(InverseKinematics, ThreeMillimeterNoiseRecovery) {
  const auto truth = generate_motion(model(), 12, 100);
  const auto fit = fit_pose_sequence(model(), add_noise(truth.markers, 0.003, 5));
  EXPECT_LT(knee_rmse_deg(truth, fit), 3.0);
  EXPECT_LT(worst_scale_error(truth.scales, fit.scales), 0.02);
}

TEST(InverseKinematics, FitFrameNeverWorseThanZeroPose) {
  const auto truth = generate_motion(model(), 13, 20);
  const auto noisy = add_noise(truth.markers, 0.005, 6);
  for (std::size_t f = 0; f < noisy.num_frames; f += 4) {
    const auto targets = make_frame_targets(model(), noisy, f);
    const auto init = zero_pose_initialization(model(), truth.scales, targets);
    const auto fit = fit_frame(model(), truth.scales, targets, nullptr, nullptr);
    EXPECT_LE(fit.cost, frame_objective(model(), truth.scales, targets, init) + 1e-9);
    EXPECT_EQ(fit.markers_used, model().markers.size());
  }
}

TEST(InverseKinematics, EquivariantUnderRigidTransform) {
  const auto truth = generate_motion(model(), 14, 10);
  const auto noisy = add_noise(truth.markers, 0.004, 7);
  std::mt19937_64 rng(8);
  const Eigen::Matrix3d R = testing_support::random_rotation(rng);
  const Eigen::Vector3d t(0.4, -1.1, 0.25);
  auto moved = noisy;
  for (auto& p : moved.points) p.position = R * p.position + t;

  IkOptions opts;
  opts.function_tolerance = 1e-14;
  opts.max_iterations = 500;
  for (std::size_t f = 0; f < noisy.num_frames; f += 3) {
    const auto a = fit_frame(model(), truth.scales, make_frame_targets(model(), noisy, f), nullptr, nullptr, opts);
    const auto b = fit_frame(model(), truth.scales, make_frame_targets(model(), moved, f), nullptr, nullptr, opts);
    EXPECT_LT((a.pose.q - b.pose.q).cwiseAbs().maxCoeff(), 1e-6) << "frame " << f;
    EXPECT_LT((R * a.pose.root.rotation - b.pose.root.rotation).norm(), 1e-6);
    EXPECT_LT((R * a.pose.root.translation + t - b.pose.root.translation).norm(), 1e-6);
    EXPECT_NEAR(a.cost, b.cost, 1e-6 * std::max(1.0, a.cost));
  }
}

TEST(InverseKinematics, NoUsableFramesFailsCalibration) {
  auto truth = generate_motion(model(), 15, 20);
  for (auto& p : truth.markers.points) p.valid = false;
  EXPECT_THROW(fit_pose_sequence(model(), truth.markers), ScaleCalibrationError);
}

TEST(InverseKinematics, NameMismatchesRejected) {
  const auto truth = generate_motion(model(), 16, 20);
  EXPECT_THROW(fit_pose_sequence(model(), truth.markers, {{"no_such_marker", 1.0}}), ValidationError);
  Pose3DSequence unrelated;
  unrelated.keypoint_names = {"a", "b", "c"};
  unrelated.resize(20);
  EXPECT_THROW(fit_pose_sequence(model(), unrelated), ValidationError);
  IkOptions bad;
  bad.min_markers_per_frame = 2;
  EXPECT_THROW(fit_pose_sequence(model(), truth.markers, {}, bad), ValidationError);
}

TEST(InverseKinematics, SparseFrameCarriesPreviousPose) {
  auto truth = generate_motion(model(), 17, 30);
  const std::size_t sparse = 12;
  for (std::size_t k = 2; k < truth.markers.num_keypoints(); ++k) truth.markers.at(sparse, k).valid = false;
  const auto fit = fit_pose_sequence(model(), truth.markers);
  EXPECT_TRUE(fit.frames[sparse].carried);
  EXPECT_TRUE(fit.frames[sparse].flagged());
  EXPECT_EQ(fit.frames[sparse].pose.q, fit.frames[sparse - 1].pose.q);
  EXPECT_FALSE(fit.frames[sparse + 1].flagged());
  EXPECT_EQ(fit.num_flagged(), 1u);
}

TEST(InverseKinematics, ZeroWeightDropsMarker) {
  const auto truth = generate_motion(model(), 18, 2);
  const auto targets = make_frame_targets(model(), truth.markers, 0, {{"left_ankle_lat", 0.0}});
  EXPECT_EQ(targets.num_active(), model().markers.size() - 1);
  EXPECT_EQ(targets.weights[*model().marker_index("left_ankle_lat")], 0.0);
}

TEST(InverseKinematics, RepeatableWithinOneProcess) {
  const auto truth = generate_motion(model(), 19, 40);
  const auto a = fit_pose_sequence(model(), truth.markers);
  std::vector<std::unique_ptr<double[]>> churn;
  for (int i = 1; i < 20; ++i) churn.emplace_back(new double[static_cast<std::size_t>(3 * i)]);
  const auto b = fit_pose_sequence(model(), truth.markers);
  EXPECT_EQ(a.scales.group, b.scales.group);
  EXPECT_EQ(a.scales.overall, b.scales.overall);
  EXPECT_EQ(a.calibration_rms_mm, b.calibration_rms_mm);
  for (std::size_t f = 0; f < a.frames.size(); ++f) EXPECT_EQ(a.frames[f].pose.q, b.frames[f].pose.q);
}
