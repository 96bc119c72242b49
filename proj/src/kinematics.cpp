#include "mvmocap/kinematics.hpp"

#include <Eigen/Geometry>
#include <algorithm>

#include "mvmocap/error.hpp"

namespace mvmocap {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace

Eigen::Matrix<double, kNumScaleParams, 1> scale_vector(const ScaleSet& s) {
  Eigen::Matrix<double, kNumScaleParams, 1> v;
  for (std::size_t g = 0; g < kNumScaleGroups; ++g) v(g) = s.group[g];
  v(kNumScaleGroups) = s.overall;
  return v;
}

ScaleSet scale_set_from_vector(const double* values) {
  ScaleSet s;
  for (std::size_t g = 0; g < kNumScaleGroups; ++g) s.group[g] = values[g];
  s.overall = values[kNumScaleGroups];
  return s;
}

FkResult forward_kinematics(const SkeletonModel& model, const Eigen::VectorXd& q, const ScaleSet& scales,
                            const RootPose& root, FkJacobian* jacobian) {
  if (static_cast<std::size_t>(q.size()) != model.num_dofs) {
    throw ValidationError("forward_kinematics: expected " + std::to_string(model.num_dofs) + " joint angles, got " +
                          std::to_string(q.size()));
  }
  const std::size_t n_seg = model.segments.size();
  FkResult out;
  out.segments.resize(n_seg);

  // Clamped angles and world-frame joint axes.
  Eigen::VectorXd angles = q;
  std::vector<Eigen::Vector3d> world_axis(model.num_dofs);
  // Unscaled world-frame link vector from parent joint to this joint.
  std::vector<Eigen::Vector3d> link(n_seg, Eigen::Vector3d::Zero());

  out.segments[0] = root;
  for (std::size_t i = 1; i < n_seg; ++i) {
    const auto& seg = model.segments[i];
    const auto& parent = out.segments[seg.parent];
    const ScaleGroup parent_group = model.segments[seg.parent].scale_group;
    link[i] = parent.rotation * seg.offset;
    out.segments[i].translation = parent.translation + scales.effective(parent_group) * link[i];

    Eigen::Matrix3d r = parent.rotation;
    for (std::size_t a = 0; a < seg.axes.size(); ++a) {
      const auto& ax = seg.axes[a];
      const std::size_t d = seg.first_dof + a;
      const double clamped = std::clamp(angles(d), ax.lower, ax.upper);
      if (clamped != angles(d)) {
        out.clamped = true;
        angles(d) = clamped;
      }
      world_axis[d] = r * ax.axis;
      r = r * Eigen::AngleAxisd(angles(d), ax.axis).toRotationMatrix();
    }
    out.segments[i].rotation = r;
  }

  const std::size_t n_markers = model.markers.size();
  out.markers.resize(n_markers);
  std::vector<Eigen::Vector3d> marker_link(n_markers);
  for (std::size_t m = 0; m < n_markers; ++m) {
    const auto& mk = model.markers[m];
    const auto& seg_pose = out.segments[mk.segment];
    marker_link[m] = seg_pose.rotation * mk.offset;
    out.markers[m] = seg_pose.translation + scales.effective(model.segments[mk.segment].scale_group) * marker_link[m];
  }
  if (jacobian == nullptr) return out;

  auto& jac = *jacobian;
  const auto rows = static_cast<Eigen::Index>(3 * n_markers);
  jac.root_translation.setZero(rows, 3);
  jac.root_rotation.setZero(rows, 3);
  jac.joints.setZero(rows, static_cast<Eigen::Index>(model.num_dofs));
  jac.scales.setZero(rows, static_cast<Eigen::Index>(kNumScaleParams));

  for (std::size_t m = 0; m < n_markers; ++m) {
    const auto r0 = static_cast<Eigen::Index>(3 * m);
    const Eigen::Vector3d& p = out.markers[m];
    const Eigen::Vector3d rel = p - root.translation;
    jac.root_translation.block<3, 3>(r0, 0).setIdentity();
    jac.root_rotation.block<3, 3>(r0, 0) = -skew(rel);
    jac.scales.block<3, 1>(r0, kNumScaleGroups) = rel / scales.overall;

    const int marker_segment = model.markers[m].segment;
    const ScaleGroup own_group = model.segments[marker_segment].scale_group;
    if (own_group != ScaleGroup::kNone) {
      jac.scales.block<3, 1>(r0, static_cast<Eigen::Index>(own_group)) += scales.overall * marker_link[m];
    }
    for (int s = marker_segment; s > 0; s = model.segments[s].parent) {
      const auto& seg = model.segments[s];
      const ScaleGroup parent_group = model.segments[seg.parent].scale_group;
      if (parent_group != ScaleGroup::kNone) {
        jac.scales.block<3, 1>(r0, static_cast<Eigen::Index>(parent_group)) += scales.overall * link[s];
      }
      const Eigen::Vector3d lever = p - out.segments[s].translation;
      for (std::size_t a = 0; a < seg.axes.size(); ++a) {
        const std::size_t d = seg.first_dof + a;
        jac.joints.block<3, 1>(r0, static_cast<Eigen::Index>(d)) = world_axis[d].cross(lever);
      }
    }
  }
  return out;
}

}  // namespace mvmocap
