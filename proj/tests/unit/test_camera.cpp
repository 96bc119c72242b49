#include <gtest/gtest.h>

#include <cmath>

#include "mvmocap/camera.hpp"
#include "mvmocap/error.hpp"
#include "test_support.hpp"

using namespace mvmocap;

namespace {

CameraParams simple_camera() {
  CameraParams c;
  c.camera_id = "c0";
  c.fx = c.fy = 1000.0;
  c.cx = c.cy = 500.0;
  return c;
}

// Brown-Conrady forward model written out term by term.
Eigen::Vector2d scalar_distort_to_pixel(double X, double Y, double Z, const CameraParams& c) {
  const double x = X / Z, y = Y / Z;
  const double r2 = x * x + y * y;
  const double radial = 1.0 + c.distortion.k1 * r2 + c.distortion.k2 * r2 * r2 + c.distortion.k3 * r2 * r2 * r2;
  const double xd = x * radial + 2.0 * c.distortion.p1 * x * y + c.distortion.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + c.distortion.p1 * (r2 + 2.0 * y * y) + 2.0 * c.distortion.p2 * x * y;
  return {c.fx * xd + c.skew * yd + c.cx, c.fy * yd + c.cy};
}

std::string one_camera_json(const std::string& rotation) {
  return R"({"frame_rate": 30, "cameras": [{"id": "a", "K": [1000,0,500,0,1000,500,0,0,1],
            "distortion": [0,0,0,0,0], "rotation": )" +
         rotation + R"(, "translation": [0,0,0]}]})";
}

}  // namespace

TEST(Projection, OpticalAxisHitsPrincipalPoint) {
  const auto px = project({0.0, 0.0, 1.0}, simple_camera());
  EXPECT_NEAR(px.x(), 500.0, 1e-12);
  EXPECT_NEAR(px.y(), 500.0, 1e-12);
}

TEST(Projection, PinholeOffset) {
  const auto px = project({0.1, 0.0, 1.0}, simple_camera());
  EXPECT_NEAR(px.x(), 600.0, 1e-12);
  EXPECT_NEAR(px.y(), 500.0, 1e-12);
}

TEST(Projection, RadialK1MatchesScalarModel) {
  auto cam = simple_camera();
  cam.distortion.k1 = 0.1;
  const auto px = project({0.1, 0.0, 1.0}, cam);
  EXPECT_NEAR(px.x(), 600.1, 1e-9);  // 1000 * 0.1 * (1 + 0.1 * 0.01) + 500
  const auto ref = scalar_distort_to_pixel(0.1, 0.0, 1.0, cam);
  EXPECT_NEAR(px.x(), ref.x(), 1e-9);
  EXPECT_NEAR(px.y(), ref.y(), 1e-9);
}

TEST(Projection, FullDistortionMatchesScalarModel) {
  auto cam = simple_camera();
  cam.fy = 980.0;
  cam.skew = 0.7;
  cam.distortion = {0.08, -0.03, 0.001, -0.002, 0.005};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.4, 0.4), z(0.8, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), z(rng));
    const auto px = project(p, cam);
    const auto ref = scalar_distort_to_pixel(p.x(), p.y(), p.z(), cam);
    EXPECT_NEAR(px.x(), ref.x(), 1e-9);
    EXPECT_NEAR(px.y(), ref.y(), 1e-9);
  }
}

TEST(Projection, ZeroDistortionReducesToPinhole) {
  auto cam = simple_camera();
  cam.rotation = rotation_from_axis_angle({0.1, -0.2, 0.3});
  cam.translation = {0.1, 0.05, 2.0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const Eigen::Vector3d h = cam.intrinsic_matrix() * cam.to_camera(p);
    const auto px = project(p, cam);
    EXPECT_NEAR(px.x(), h.x() / h.z(), 1e-9);
    EXPECT_NEAR(px.y(), h.y() / h.z(), 1e-9);
  }
}

TEST(Projection, BehindCameraThrows) {
  EXPECT_THROW(project({0.0, 0.0, -1.0}, simple_camera()), BehindCameraError);
  EXPECT_FALSE(try_project({0.0, 0.0, 0.0}, simple_camera()).has_value());
}

TEST(Projection, UnprojectRoundTrip) {
  auto cam = simple_camera();
  cam.rotation = rotation_from_axis_angle({-0.3, 0.2, 0.1});
  cam.translation = {0.2, -0.1, 1.5};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const double depth = cam.to_camera(p).z();
    const auto back = unproject(project(p, cam), depth, cam);
    EXPECT_LT((back - p).norm(), 1e-9);
  }
}

TEST(Projection, RigidTransformEquivariance) {
  auto cam = simple_camera();
  cam.distortion = {0.05, -0.01, 0.0005, 0.0003, 0.0};
  cam.rotation = rotation_from_axis_angle({0.2, 0.1, -0.1});
  cam.translation = {0.0, 0.1, 2.0};
  std::mt19937_64 rng(11);
  const Eigen::Matrix3d G = testing_support::random_rotation(rng);
  const Eigen::Vector3d g(0.4, -1.0, 2.5);
  // World points move by (G, g); extrinsics absorb the inverse.
  CameraParams moved = cam;
  moved.rotation = cam.rotation * G.transpose();
  moved.translation = cam.translation - moved.rotation * g;
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const auto a = project(p, cam);
    const auto b = project(G * p + g, moved);
    EXPECT_LT((a - b).norm(), 1e-9);
  }
}

TEST(Projection, UndistortInvertsDistort) {
  const Distortion d{0.1, -0.05, 0.002, -0.001, 0.01};
  for (double x = -0.5; x <= 0.5; x += 0.1) {
    for (double y = -0.4; y <= 0.4; y += 0.1) {
      const Eigen::Vector2d p(x, y);
      EXPECT_LT((undistort_normalized(distort_normalized(p, d), d) - p).norm(), 1e-10);
    }
  }
}

TEST(Rotation, AxisAngleRoundTrip) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d R = testing_support::random_rotation(rng);
    EXPECT_LT((rotation_from_axis_angle(axis_angle_from_rotation(R)) - R).norm(), 1e-9);
  }
  EXPECT_LT(axis_angle_from_rotation(Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(Calibration, BundledSampleHasEightCamerasInFileOrder) {
  const auto rig = load_calibration(std::filesystem::path(MVMOCAP_DATA_DIR) / "sample_calibration.json");
  ASSERT_EQ(rig.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "cam%02zu", i);
    EXPECT_EQ(rig.cameras[i].camera_id, id);
  }
  EXPECT_NO_THROW(rig.validate_for_triangulation());
}

TEST(Calibration, FormatParseRoundTrip) {
  auto rig = testing_support::ring(5);
  rig.cameras[2].distortion = {0.01, -0.002, 0.0001, 0.0002, 0.0003};
  rig.cameras[3].skew = 0.5;
  const auto back = parse_calibration(format_calibration(rig));
  ASSERT_EQ(back.size(), rig.size());
  for (std::size_t i = 0; i < rig.size(); ++i) {
    const auto& a = rig.cameras[i];
    const auto& b = back.cameras[i];
    EXPECT_EQ(a.camera_id, b.camera_id);
    EXPECT_EQ(a.fx, b.fx);
    EXPECT_EQ(a.skew, b.skew);
    EXPECT_EQ(a.distortion.k3, b.distortion.k3);
    EXPECT_LT((a.rotation - b.rotation).norm(), 1e-15);
    EXPECT_LT((a.translation - b.translation).norm(), 1e-15);
  }
}

TEST(Calibration, SingleCameraLoadsButCannotTriangulate) {
  const auto rig = parse_calibration(one_camera_json("[1,0,0,0,1,0,0,0,1]"));
  EXPECT_EQ(rig.size(), 1u);
  EXPECT_THROW(rig.validate_for_triangulation(), ValidationError);
}

TEST(Calibration, ReflectionRejected) {
  EXPECT_THROW(parse_calibration(one_camera_json("[1,0,0,0,1,0,0,0,-1]")), ValidationError);
}

TEST(Calibration, AxisAngleAccepted) {
  const auto rig = parse_calibration(one_camera_json("[0, 0, 1.5707963267948966]"));
  const Eigen::Matrix3d expected = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  EXPECT_LT((rig.cameras[0].rotation - expected).norm(), 1e-12);
}

TEST(Calibration, SlightlyNonOrthonormalIsRepairedWithWarning) {
  std::vector<std::string> warnings;
  const auto rig = parse_calibration(one_camera_json("[1.00001,0,0,0,1,0,0,0,1]"), &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  const Eigen::Matrix3d& R = rig.cameras[0].rotation;
  EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-9);
  EXPECT_THROW(parse_calibration(one_camera_json("[1.01,0,0,0,1,0,0,0,1]")), ValidationError);
}

TEST(Calibration, DuplicateIdsAndBadFocalRejected) {
  CameraRig rig = testing_support::ring(3);
  rig.cameras[1].camera_id = rig.cameras[0].camera_id;
  EXPECT_THROW(rig.validate(), ValidationError);
  CameraParams c = simple_camera();
  c.fx = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}
