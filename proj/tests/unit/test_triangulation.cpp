#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mvmocap/error.hpp"
#include "mvmocap/skeleton.hpp"
#include "mvmocap/synth.hpp"
#include "mvmocap/triangulation.hpp"
#include "test_support.hpp"

using namespace mvmocap;

namespace {

std::vector<Observation> exact_observations(const CameraRig& rig, const Eigen::Vector3d& p) {
  std::vector<Observation> obs;
  for (const auto& cam : rig.cameras) obs.push_back({&cam, project(p, cam), 1.0});
  return obs;
}

// 20 keypoints of random motion, projected exactly.
struct Scene {
  CameraRig rig;
  Pose3DSequence truth;
  std::vector<DetectionSequence> detections;
};

Scene make_scene(std::size_t cameras, std::size_t frames, double noise_px, std::uint64_t seed) {
  const auto model = load_skeleton_model(default_skeleton_model_path());
  SceneSpec spec;
  spec.n_cameras = cameras;
  spec.pixel_noise_px = noise_px;
  spec.seed = seed;
  spec.duration_frames = frames;
  Scene s;
  s.rig = make_camera_ring(spec);
  const auto gt = generate_motion(model, seed, frames);
  auto names = gt.markers.keypoint_names;
  names.resize(20);
  s.truth = select_keypoints(gt.markers, names);
  s.detections = render_detections(s.truth, s.rig, spec);
  return s;
}

double max_error(const Pose3DSequence& a, const Pose3DSequence& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) e = std::max(e, (a.points[i].position - b.points[i].position).norm());
  return e;
}

}  // namespace

TEST(TriangulatePoint, NoiselessRingRecoversPointWithEqualWeights) {
  const auto rig = testing_support::ring(8);
  const Eigen::Vector3d p(0.1, 0.2, 0.05);
  const auto r = triangulate_point(exact_observations(rig, p));
  ASSERT_TRUE(r.valid);
  EXPECT_LT((r.position - p).norm(), 1e-6);
  EXPECT_EQ(r.effective_views, 8);
  const auto [mn, mx] = std::minmax_element(r.weights.begin(), r.weights.end());
  EXPECT_NEAR(*mn, *mx, 1e-9 * *mx);
}

TEST(TriangulatePoint, FiftyPixelOutlierSuppressed) {
  const auto rig = testing_support::ring(8);
  const Eigen::Vector3d p(0.1, 0.2, 0.05);
  for (std::size_t bad = 0; bad < 8; ++bad) {
    auto obs = exact_observations(rig, p);
    obs[bad].pixel.x() += 50.0;
    const auto r = triangulate_point(obs);
    ASSERT_TRUE(r.valid);
    EXPECT_LT((r.position - p).norm(), 1e-4) << "corrupted camera " << bad;
    const double wmax = *std::max_element(r.weights.begin(), r.weights.end());
    EXPECT_LT(r.weights[bad], 0.05 * wmax) << "corrupted camera " << bad;
  }
}

TEST(TriangulatePoint, SingleObservationIsInvalid) {
  const auto rig = testing_support::ring(8);
  auto obs = exact_observations(rig, {0.0, 0.0, 0.1});
  obs.resize(1);
  const auto r = triangulate_point(obs);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.effective_views, 1);
}

TEST(TriangulatePoint, ZeroConfidenceViewsAreIgnored) {
  const auto rig = testing_support::ring(8);
  auto obs = exact_observations(rig, {0.0, 0.0, 0.1});
  for (std::size_t i = 1; i < obs.size(); ++i) obs[i].confidence = 0.0;
  EXPECT_FALSE(triangulate_point(obs).valid);
}

TEST(TriangulatePoint, ConfidenceScalingInvariance) {
  const auto rig = testing_support::ring(6);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> c(0.3, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto obs = exact_observations(rig, {0.05, -0.1, 0.1});
    for (auto& o : obs) {
      o.pixel += Eigen::Vector2d(n(rng), n(rng));
      o.confidence = c(rng);
    }
    auto scaled = obs;
    for (auto& o : scaled) o.confidence *= 0.37;
    const auto a = triangulate_point(obs);
    const auto b = triangulate_point(scaled);
    EXPECT_LT((a.position - b.position).norm(), 1e-9);
  }
}

TEST(TriangulatePoint, CameraPermutationInvariance) {
  const auto rig = testing_support::ring(7);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto obs = exact_observations(rig, {-0.05, 0.1, 0.12});
    for (auto& o : obs) o.pixel += Eigen::Vector2d(n(rng), n(rng));
    obs[trial % 7].pixel.y() += 40.0;
    auto shuffled = obs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_LT((triangulate_point(obs).position - triangulate_point(shuffled).position).norm(), 1e-9);
  }
}

TEST(TriangulatePoint, GrossOutlierWithFourHonestViewsIsExcluded) {
  // Four exact views plus one corrupted by 50 to 100 px.
  const auto rig = testing_support::ring(8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.1, 0.1), mag(50.0, 100.0), ang(0.0, 2.0 * M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d p(u(rng), u(rng), 0.1 + u(rng));
    auto all = exact_observations(rig, p);
    std::vector<Observation> obs(all.begin(), all.begin() + 5);
    std::vector<Observation> honest(all.begin() + 1, all.begin() + 5);
    const double baseline = (triangulate_point(honest).position - p).norm();
    const double a = ang(rng), m = mag(rng);
    obs[0].pixel += m * Eigen::Vector2d(std::cos(a), std::sin(a));
    const auto r = triangulate_point(obs);
    EXPECT_LT((r.position - p).norm(), 5.0 * std::max(baseline, 1e-12)) << "magnitude " << m;
    EXPECT_EQ(r.effective_views, 4);
  }
}

TEST(TriangulatePoint, CorruptionUpTo100PxStaysWithinFiveTimesHonestError) {
  // Noisy honest views; one extra view corrupted by 0 to 100 px.
  const auto rig = testing_support::ring(8);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.1, 0.1), mag(0.0, 100.0), ang(0.0, 2.0 * M_PI);
  double honest_sum = 0.0, corrupted_sum = 0.0;
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::Vector3d p(u(rng), u(rng), 0.1 + u(rng));
    auto all = exact_observations(rig, p);
    for (auto& o : all) o.pixel += Eigen::Vector2d(noise(rng), noise(rng));
    std::vector<Observation> obs(all.begin(), all.begin() + 5);
    std::vector<Observation> honest(all.begin() + 1, all.begin() + 5);
    const double a = ang(rng);
    obs[0].pixel += mag(rng) * Eigen::Vector2d(std::cos(a), std::sin(a));
    honest_sum += (triangulate_point(honest).position - p).norm();
    corrupted_sum += (triangulate_point(obs).position - p).norm();
  }
  EXPECT_LT(corrupted_sum, 5.0 * honest_sum);
}

TEST(TriangulatePoint, OpposedPairIsWellConditioned) {
  const auto rig = testing_support::ring(2);
  const Eigen::Vector3d p(0.02, -0.03, 0.1);
  const auto r = triangulate_point(exact_observations(rig, p));
  ASSERT_TRUE(r.valid);
  EXPECT_FALSE(r.degenerate);
  EXPECT_LT((r.position - p).norm(), 1e-6);
}

TEST(RobustTriangulate, NoiselessTrialIsExact) {
  const auto s = make_scene(8, 100, 0.0, 9);
  const auto pose = robust_triangulate(s.detections, s.rig);
  ASSERT_EQ(pose.num_frames, 100u);
  ASSERT_EQ(pose.num_keypoints(), 20u);
  for (const auto& p : pose.points) ASSERT_TRUE(p.valid);
  EXPECT_LT(max_error(pose, s.truth), 1e-6);
}

TEST(RobustTriangulate, ErrorShrinksAsCamerasAreAdded) {
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n : {2u, 3u, 4u, 6u, 8u}) {
    const auto s = make_scene(n, 100, 2.0, 21);
    const auto pose = robust_triangulate(s.detections, s.rig);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pose.points.size(); ++i) {
      if (!pose.points[i].valid) continue;
      sum += (pose.points[i].position - s.truth.points[i].position).norm();
      ++count;
    }
    const double mean = sum / static_cast<double>(count);
    EXPECT_LT(mean, previous) << n << " cameras";
    previous = mean;
  }
}

TEST(RobustTriangulate, KeypointWithoutConfidenceIsInvalidEverywhere) {
  auto s = make_scene(8, 30, 1.0, 5);
  for (auto& det : s.detections)
    for (std::size_t f = 0; f < det.num_frames; ++f) det.at(f, 3).confidence = 0.0;
  const auto pose = robust_triangulate(s.detections, s.rig);
  for (std::size_t f = 0; f < pose.num_frames; ++f) {
    EXPECT_FALSE(pose.at(f, 3).valid);
    EXPECT_TRUE(pose.at(f, 4).valid);
  }
}

TEST(RobustTriangulate, WorkerCountDoesNotChangeResult) {
  const auto s = make_scene(6, 60, 2.0, 17);
  TriangulationOptions one, four;
  four.workers = 4;
  const auto a = robust_triangulate(s.detections, s.rig, one);
  const auto b = robust_triangulate(s.detections, s.rig, four);
  EXPECT_EQ(format_pose3d(a), format_pose3d(b));
}

TEST(RobustTriangulate, MismatchedInputsNameTheCamera) {
  auto s = make_scene(4, 10, 0.0, 1);
  s.detections[2].resize(9);
  try {
    robust_triangulate(s.detections, s.rig);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(s.detections[2].camera_id), std::string::npos) << e.what();
  }
  auto t = make_scene(4, 10, 0.0, 1);
  t.detections[1].keypoint_names[0] = "elsewhere";
  EXPECT_THROW(robust_triangulate(t.detections, t.rig), ValidationError);
  auto u = make_scene(4, 10, 0.0, 1);
  u.detections[3].camera_id = "unknown";
  EXPECT_THROW(robust_triangulate(u.detections, u.rig), ValidationError);
}

TEST(Reproject, RoundTripOfExactProjections) {
  const auto s = make_scene(8, 20, 0.0, 3);
  const auto pose = robust_triangulate(s.detections, s.rig);
  const auto rep = reproject(pose, s.rig);
  ASSERT_EQ(rep.size(), 8u);
  for (std::size_t c = 0; c < 8; ++c) {
    const auto& det = s.detections[c];
    for (std::size_t f = 0; f < det.num_frames; ++f) {
      for (std::size_t k = 0; k < det.num_keypoints(); ++k) {
        const auto& r = rep[c].at(f, k);
        ASSERT_TRUE(r.has_value());
        EXPECT_LT((*r - Eigen::Vector2d(det.at(f, k).u, det.at(f, k).v)).norm(), 1e-6);
      }
    }
  }
}

TEST(Reproject, MatchesDirectProjectionAndSkipsInvalidPoints) {
  auto rig = testing_support::ring(4);
  rig.cameras[1].distortion = {0.05, -0.01, 0.001, 0.0, 0.0};
  Pose3DSequence pose;
  pose.keypoint_names = {"a", "b"};
  pose.resize(1);
  pose.at(0, 0) = {Eigen::Vector3d(0.03, -0.02, 0.15), true, 4};
  pose.at(0, 1) = {Eigen::Vector3d(0.0, 0.0, 0.1), false, 1};
  const auto rep = reproject(pose, rig);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(rep[c].camera_id, rig.cameras[c].camera_id);
    ASSERT_TRUE(rep[c].at(0, 0).has_value());
    EXPECT_LT((*rep[c].at(0, 0) - project(pose.at(0, 0).position, rig.cameras[c])).norm(), 1e-12);
    EXPECT_FALSE(rep[c].at(0, 1).has_value());
  }
}
