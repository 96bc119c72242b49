#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "mvmocap/ik.hpp"
#include "mvmocap/kinematics.hpp"
#include "mvmocap/trajectory.hpp"

using namespace mvmocap;

namespace {

const SkeletonModel& model() {
  static const SkeletonModel m = load_skeleton_model(default_skeleton_model_path());
  return m;
}

// 0 -> peak -> 0 -> peak ... with `half` frames per leg.
std::vector<double> triangle(std::size_t frames, std::size_t half, double low, double high, bool rising_first = true) {
  std::vector<double> v(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t phase = t % (2 * half);
    double s = phase <= half ? static_cast<double>(phase) / half : static_cast<double>(2 * half - phase) / half;
    if (!rising_first) s = 1.0 - s;
    v[t] = low + s * (high - low);
  }
  return v;
}

JointTrajectory make_trajectory(std::size_t frames, std::vector<double> lk, std::vector<double> rk,
                                std::vector<double> lh, std::vector<double> rh) {
  JointTrajectory t;
  t.angle_names = {"left_knee_flexion", "right_knee_flexion", "left_hip_flexion", "right_hip_flexion"};
  t.values_deg = {std::move(lk), std::move(rk), std::move(lh), std::move(rh)};
  t.flagged.assign(frames, false);
  return t;
}

std::vector<double> flat(std::size_t frames, double value = 10.0) { return std::vector<double>(frames, value); }

std::vector<KneeEvent> left_events(const std::vector<KneeEvent>& events) {
  std::vector<KneeEvent> out;
  for (const auto& e : events)
    if (e.side == "left") out.push_back(e);
  return out;
}

}  // namespace

TEST(Trajectory, ConstantPoseGivesConstantSeries) {
  IkResult fit;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(model().num_dofs);
  q(*model().dof_index("left_knee_flexion")) = 0.7;
  for (int f = 0; f < 40; ++f) fit.frames.push_back(FrameFit{FramePose{RootPose{}, q}, 0.0, 0.0, 60, 1, true, false});
  SmoothingOptions smooth;
  smooth.lowpass_cutoff_hz = 4.0;
  const auto traj = extract_joint_trajectories(fit, model(), {"left_knee_flexion", "right_hip_flexion"}, 29.0, smooth);
  ASSERT_EQ(traj.num_frames(), 40u);
  for (double v : traj.series("left_knee_flexion")) EXPECT_NEAR(v, 0.7 * 180.0 / M_PI, 1e-9);
  for (double v : traj.series("right_hip_flexion")) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(traj.series("left_elbow_flexion"), ValidationError);
  EXPECT_THROW(extract_joint_trajectories(fit, model(), {"elbow"}), ValidationError);
  const auto all = extract_joint_trajectories(fit, model());
  EXPECT_EQ(all.angle_names.size(), model().num_dofs);
}

TEST(Trajectory, SinusoidalKneeRecoveredThroughIk) {
  const double fps = 29.0, freq = 0.5;
  const std::size_t frames = 116;  // two periods
  const auto knee = *model().dof_index("left_knee_flexion");
  Pose3DSequence markers;
  markers.keypoint_names = model().marker_names();
  markers.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model().num_dofs);
    q(knee) = (55.0 + 35.0 * std::sin(2 * M_PI * freq * f / fps)) * M_PI / 180.0;
    const auto fk = forward_kinematics(model(), q, ScaleSet{}, RootPose{Eigen::Matrix3d::Identity(), {0, 0, 0.1}});
    for (std::size_t k = 0; k < fk.markers.size(); ++k) markers.at(f, k) = Point3D{fk.markers[k], true, 8};
  }
  const auto fit = fit_pose_sequence(model(), markers);
  const auto traj = extract_joint_trajectories(fit, model(), {"left_knee_flexion"}, fps);
  const auto& s = traj.series("left_knee_flexion");
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  EXPECT_NEAR((*mx - *mn) / 2.0, 35.0, 0.05 * 35.0);

  double mean = 0.0;
  for (double v : s) mean += v / s.size();
  double best_f = 0.0, best_power = -1.0;
  for (double f = 0.2; f <= 1.0; f += 0.001) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) acc += (s[t] - mean) * std::polar(1.0, -2 * M_PI * f * t / fps);
    if (std::norm(acc) > best_power) best_power = std::norm(acc), best_f = f;
  }
  EXPECT_NEAR(best_f, freq, 0.05 * freq);
}

TEST(Trajectory, FlagsFollowTheFit) {
  IkResult fit;
  for (int f = 0; f < 5; ++f) {
    FrameFit ff;
    ff.pose.q = Eigen::VectorXd::Zero(model().num_dofs);
    ff.converged = f != 2;
    ff.carried = f == 4;
    fit.frames.push_back(ff);
  }
  const auto traj = extract_joint_trajectories(fit, model(), {"left_knee_flexion"});
  EXPECT_EQ(traj.flagged, (std::vector<bool>{false, false, true, false, true}));
}

TEST(Lowpass, PreservesConstantsAndSlowSignals) {
  EXPECT_EQ(lowpass_filtfilt({3.0}, 5.0, 29.0), std::vector<double>{3.0});
  for (double v : lowpass_filtfilt(std::vector<double>(50, 4.2), 5.0, 29.0)) EXPECT_NEAR(v, 4.2, 1e-12);

  const double fps = 100.0;
  std::vector<double> slow(400), fast(400);
  for (std::size_t t = 0; t < slow.size(); ++t) {
    slow[t] = std::sin(2 * M_PI * 0.5 * t / fps);
    fast[t] = std::sin(2 * M_PI * 30.0 * t / fps);
  }
  const auto ys = lowpass_filtfilt(slow, 6.0, fps);
  const auto yf = lowpass_filtfilt(fast, 6.0, fps);
  for (std::size_t t = 50; t < 350; ++t) {
    EXPECT_NEAR(ys[t], slow[t], 0.01);  // zero phase: no lag
    EXPECT_LT(std::abs(yf[t]), 0.05);
  }
}

TEST(Lowpass, RejectsBadCutoff) {
  EXPECT_THROW(lowpass_filtfilt({1, 2, 3}, 0.0, 29.0), ValidationError);
  EXPECT_THROW(lowpass_filtfilt({1, 2, 3}, 14.5, 29.0), ValidationError);
  EXPECT_THROW(lowpass_filtfilt({1, 2, 3}, 2.0, 0.0), ValidationError);
}

TEST(Lowpass, SmoothedAnglesStayInsideLimits) {
  IkResult fit;
  const auto knee = *model().dof_index("left_knee_flexion");
  for (int f = 0; f < 60; ++f) {
    FrameFit ff;
    ff.converged = true;
    ff.pose.q = Eigen::VectorXd::Zero(model().num_dofs);
    ff.pose.q(knee) = (f / 6) % 2 == 0 ? 0.0 : 1.5;  // square wave against the 0 limit
    fit.frames.push_back(ff);
  }
  SmoothingOptions smooth;
  smooth.lowpass_cutoff_hz = 3.0;
  const auto traj = extract_joint_trajectories(fit, model(), {"left_knee_flexion"}, 29.0, smooth);
  for (double v : traj.series("left_knee_flexion")) EXPECT_GE(v, 0.0);
}

TEST(KneeEvents, IsolatedFlexion) {
  const std::size_t n = 121;
  const auto traj = make_trajectory(n, triangle(n, 30, 20, 60), flat(n), flat(n), flat(n));
  const auto events = classify_knee_events(traj);
  ASSERT_EQ(events.size(), 4u);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].side, "left");
    EXPECT_EQ(events[i].label, KneeEventLabel::kIsolated);
    EXPECT_EQ(events[i].start_frame, 30 * i);
    EXPECT_EQ(events[i].end_frame, 30 * (i + 1));
    EXPECT_EQ(events[i].direction, i % 2 == 0 ? 1 : -1);
    EXPECT_NEAR(events[i].knee_excursion_deg, 40.0, 1e-9);
    EXPECT_FALSE(events[i].flagged);
  }
}

TEST(KneeEvents, MirroredWithHip) {
  const std::size_t n = 61;
  const auto knees = triangle(n, 30, 20, 50);
  const auto hips = triangle(n, 30, 30, 45);
  const auto events = classify_knee_events(make_trajectory(n, knees, knees, hips, hips));
  ASSERT_EQ(events.size(), 2u);
  for (const auto& e : events) {
    EXPECT_EQ(e.side, "bilateral");
    EXPECT_EQ(e.label, KneeEventLabel::kSynergisticMirrored);
    EXPECT_NEAR(e.hip_excursion_deg, 15.0, 1e-9);
    EXPECT_NEAR(e.contralateral_excursion_deg, 30.0, 1e-9);
  }
}

TEST(KneeEvents, BilateralWithFlatHipIsOther) {
  const std::size_t n = 61;
  const auto knees = triangle(n, 30, 20, 60);
  const auto events = classify_knee_events(make_trajectory(n, knees, knees, flat(n), flat(n)));
  ASSERT_EQ(events.size(), 2u);
  for (const auto& e : events) {
    EXPECT_EQ(e.side, "bilateral");
    EXPECT_EQ(e.label, KneeEventLabel::kOther);
  }
}

TEST(KneeEvents, RuleTable) {
  struct Row {
    const char* what;
    std::vector<double> contra;
    std::vector<double> hip;
    KneeEventLabel expected;
  };
  const std::size_t n = 31;
  const std::vector<Row> rows{
      {"both still", flat(n), flat(n), KneeEventLabel::kIsolated},
      {"both just under", triangle(n, 30, 0, 9.9), triangle(n, 30, 0, 9.9), KneeEventLabel::kIsolated},
      {"co-moving", triangle(n, 30, 0, 12), triangle(n, 30, 0, 12), KneeEventLabel::kSynergisticMirrored},
      {"at threshold", triangle(n, 30, 0, 10), triangle(n, 30, 0, 10), KneeEventLabel::kSynergisticMirrored},
      {"contra opposed", triangle(n, 30, 0, 15, false), triangle(n, 30, 0, 15), KneeEventLabel::kOther},
      {"hip still", triangle(n, 30, 0, 15), flat(n), KneeEventLabel::kOther},
      {"contra still", flat(n), triangle(n, 30, 0, 15), KneeEventLabel::kOther},
      {"hip opposed", triangle(n, 30, 0, 15), triangle(n, 30, 0, 15, false), KneeEventLabel::kSynergisticMirrored},
  };
  for (const auto& r : rows) {
    const auto traj = make_trajectory(n, triangle(n, 30, 20, 60), r.contra, r.hip, flat(n));
    KneeEventParams p;
    p.merge_bilateral = false;
    const auto events = left_events(classify_knee_events(traj, p));
    ASSERT_EQ(events.size(), 1u) << r.what;
    EXPECT_EQ(events[0].label, r.expected) << r.what;
  }
}

TEST(KneeEvents, SmallOrShortMovementsIgnored) {
  const std::size_t n = 61;
  EXPECT_TRUE(classify_knee_events(make_trajectory(n, triangle(n, 30, 20, 39), flat(n), flat(n), flat(n))).empty());
  std::vector<double> spike = flat(n);
  spike[1] = 40.0;  // windows of 2 frames
  EXPECT_TRUE(classify_knee_events(make_trajectory(n, spike, flat(n), flat(n), flat(n))).empty());
  EXPECT_TRUE(classify_knee_events(make_trajectory(n, flat(n), flat(n), flat(n), flat(n))).empty());
}

TEST(KneeEvents, FlaggedFramesMarkTheEvent) {
  const std::size_t n = 61;
  auto traj = make_trajectory(n, triangle(n, 30, 20, 60), flat(n), flat(n), flat(n));
  traj.flagged[45] = true;
  const auto events = classify_knee_events(traj);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_FALSE(events[0].flagged);
  EXPECT_TRUE(events[1].flagged);
}

TEST(KneeEvents, MissingAnglesRejected) {
  JointTrajectory t;
  t.angle_names = {"left_knee_flexion"};
  t.values_deg = {flat(10)};
  t.flagged.assign(10, false);
  EXPECT_THROW(classify_knee_events(t), ValidationError);
  KneeEventParams p;
  p.event_threshold_deg = 0.0;
  EXPECT_THROW(classify_knee_events(make_trajectory(10, flat(10), flat(10), flat(10), flat(10)), p), ValidationError);
}

TEST(KneeEventLabels, Names) {
  EXPECT_EQ(knee_event_label_name(KneeEventLabel::kIsolated), "isolated");
  EXPECT_EQ(knee_event_label_name(KneeEventLabel::kSynergisticMirrored), "synergistic_mirrored");
  EXPECT_EQ(knee_event_label_name(KneeEventLabel::kOther), "other");
}
