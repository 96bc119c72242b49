#pragma once

#include <Eigen/Core>
#include <vector>

#include "mvmocap/skeleton.hpp"

namespace mvmocap {

// Pelvis pose in the world. Translation in meters.
struct RootPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct FkResult {
  std::vector<Eigen::Vector3d> markers;  // world frame, model marker order
  std::vector<RootPose> segments;        // world pose of each segment's joint frame
  bool clamped = false;                  // some q was outside its limits
};

// Marker k owns rows 3k..3k+2.
struct FkJacobian {
  Eigen::MatrixXd root_translation;  // 3M x 3
  Eigen::MatrixXd root_rotation;     // 3M x 3, increment d in R <- exp([d]x) R
  Eigen::MatrixXd joints;            // 3M x num_dofs
  Eigen::MatrixXd scales;            // 3M x 9, group scales then overall
};

inline constexpr std::size_t kNumScaleParams = kNumScaleGroups + 1;

Eigen::Matrix<double, kNumScaleParams, 1> scale_vector(const ScaleSet& s);
ScaleSet scale_set_from_vector(const double* values);

// Angles outside their limits are clamped before use and reported through
// FkResult::clamped. The Jacobian is evaluated at the clamped angles.
FkResult forward_kinematics(const SkeletonModel& model, const Eigen::VectorXd& q, const ScaleSet& scales,
                            const RootPose& root, FkJacobian* jacobian = nullptr);

}  // namespace mvmocap
