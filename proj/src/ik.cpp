#include "mvmocap/ik.hpp"

#include <ceres/ceres.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <memory>

#include "mvmocap/camera.hpp"
#include "mvmocap/procrustes.hpp"

namespace mvmocap {

namespace {

constexpr double kMetersToMm = 1000.0;

using RowMajor3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

// Frame parameter block: translation (3), rotation matrix row-major (9),
// joint angles (n). Rotation updates are body-frame increments R exp([d]x).
class FrameParameterization final : public ceres::LocalParameterization {
 public:
  explicit FrameParameterization(int num_dofs) : n_(num_dofs) {}

  bool Plus(const double* x, const double* delta, double* x_plus_delta) const override {
    for (int i = 0; i < 3; ++i) x_plus_delta[i] = x[i] + delta[i];
    const Eigen::Vector3d w(delta[3], delta[4], delta[5]);
    const double angle = w.norm();
    Eigen::Matrix3d inc = Eigen::Matrix3d::Identity();
    if (angle > 0.0) inc = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    Eigen::Map<RowMajor3>(x_plus_delta + 3) = Eigen::Map<const RowMajor3>(x + 3) * inc;
    for (int d = 0; d < n_; ++d) x_plus_delta[12 + d] = x[12 + d] + delta[6 + d];
    return true;
  }

  bool ComputeJacobian(const double* x, double* jacobian) const override {
    const int cols = LocalSize();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> j(jacobian, GlobalSize(), cols);
    j.setZero();
    for (int i = 0; i < 3; ++i) j(i, i) = 1.0;
    const Eigen::Map<const RowMajor3> r(x + 3);
    for (int k = 0; k < 3; ++k) {
      Eigen::Matrix3d gen = Eigen::Matrix3d::Zero();
      const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
      gen << 0, -e.z(), e.y(), e.z(), 0, -e.x(), -e.y(), e.x(), 0;
      const Eigen::Matrix3d m = r * gen;
      for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) j(3 + 3 * row + col, 3 + k) = m(row, col);
    }
    for (int d = 0; d < n_; ++d) j(12 + d, 6 + d) = 1.0;
    return true;
  }

  int GlobalSize() const override { return 12 + n_; }
  int LocalSize() const override { return 6 + n_; }

 private:
  int n_;
};

std::vector<double> pack(const FramePose& pose) {
  std::vector<double> x(12 + static_cast<std::size_t>(pose.q.size()));
  for (int i = 0; i < 3; ++i) x[i] = pose.root.translation(i);
  Eigen::Map<RowMajor3>(x.data() + 3) = pose.root.rotation;
  for (Eigen::Index d = 0; d < pose.q.size(); ++d) x[12 + d] = pose.q(d);
  return x;
}

FramePose unpack(const double* x, std::size_t num_dofs) {
  FramePose pose;
  pose.root.translation = Eigen::Vector3d(x[0], x[1], x[2]);
  pose.root.rotation = Eigen::Map<const RowMajor3>(x + 3);
  pose.q = Eigen::Map<const Eigen::VectorXd>(x + 12, static_cast<Eigen::Index>(num_dofs));
  return pose;
}

// Residuals in millimeters for the active markers of one frame, optionally
// followed by the temporal regularizer rows.
class FrameCost final : public ceres::CostFunction {
 public:
  FrameCost(const SkeletonModel& model, const FrameTargets& targets, const Eigen::VectorXd* prior, double mu)
      : model_(model), targets_(targets) {
    for (std::size_t m = 0; m < targets.weights.size(); ++m) {
      if (targets.weights[m] > 0.0) {
        active_.push_back(m);
        sqrt_w_.push_back(kMetersToMm * std::sqrt(targets.weights[m]));
      }
    }
    if (prior != nullptr && mu > 0.0) {
      prior_ = *prior;
      sqrt_mu_ = std::sqrt(mu);
    }
    const int n = static_cast<int>(model.num_dofs);
    set_num_residuals(static_cast<int>(3 * active_.size()) + (prior_.size() > 0 ? n : 0));
    mutable_parameter_block_sizes()->push_back(12 + n);
    mutable_parameter_block_sizes()->push_back(static_cast<int>(kNumScaleParams));
  }

  bool Evaluate(double const* const* parameters, double* residuals, double** jacobians) const override {
    const std::size_t n = model_.num_dofs;
    const FramePose pose = unpack(parameters[0], n);
    const ScaleSet scales = scale_set_from_vector(parameters[1]);
    const bool want_jac = jacobians != nullptr && (jacobians[0] != nullptr || jacobians[1] != nullptr);
    FkJacobian jac;
    const auto fk = forward_kinematics(model_, pose.q, scales, pose.root, want_jac ? &jac : nullptr);

    const int cols0 = static_cast<int>(12 + n);
    const int cols1 = static_cast<int>(kNumScaleParams);
    const int rows = num_residuals();
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::optional<Eigen::Map<RowMat>> j0, j1;
    if (want_jac && jacobians[0] != nullptr) {
      j0.emplace(jacobians[0], rows, cols0);
      j0->setZero();
    }
    if (want_jac && jacobians[1] != nullptr) {
      j1.emplace(jacobians[1], rows, cols1);
      j1->setZero();
    }

    for (std::size_t i = 0; i < active_.size(); ++i) {
      const std::size_t m = active_[i];
      const double c = sqrt_w_[i];
      const Eigen::Vector3d r = c * (fk.markers[m] - targets_.positions[m]);
      const auto row = static_cast<Eigen::Index>(3 * i);
      for (int k = 0; k < 3; ++k) residuals[row + k] = r(k);
      if (j0) {
        const Eigen::Vector3d a = pose.root.rotation.transpose() * (fk.markers[m] - pose.root.translation);
        for (int k = 0; k < 3; ++k) {
          (*j0)(row + k, k) = c;
          for (int col = 0; col < 3; ++col) (*j0)(row + k, 3 + 3 * k + col) = c * a(col);
        }
        j0->block(row, 12, 3, static_cast<Eigen::Index>(n)) = c * jac.joints.middleRows<3>(3 * m);
      }
      if (j1) j1->block(row, 0, 3, cols1) = c * jac.scales.middleRows<3>(3 * m);
    }
    if (prior_.size() > 0) {
      const auto row = static_cast<Eigen::Index>(3 * active_.size());
      for (std::size_t d = 0; d < n; ++d) {
        residuals[row + d] = sqrt_mu_ * (pose.q(d) - prior_(d));
        if (j0) (*j0)(row + d, 12 + d) = sqrt_mu_;
      }
    }
    return true;
  }

 private:
  const SkeletonModel& model_;
  const FrameTargets& targets_;
  std::vector<std::size_t> active_;
  std::vector<double> sqrt_w_;
  Eigen::VectorXd prior_;
  double sqrt_mu_ = 0.0;
};

void add_frame_block(ceres::Problem& problem, const SkeletonModel& model, const FrameTargets& targets,
                     const Eigen::VectorXd* prior, double mu, double* x, double* scales) {
  problem.AddParameterBlock(x, static_cast<int>(12 + model.num_dofs),
                            new FrameParameterization(static_cast<int>(model.num_dofs)));
  problem.AddResidualBlock(new FrameCost(model, targets, prior, mu), nullptr, x, scales);
  const auto lower = model.lower_limits();
  const auto upper = model.upper_limits();
  for (std::size_t d = 0; d < model.num_dofs; ++d) {
    problem.SetParameterLowerBound(x, static_cast<int>(12 + d), lower(d));
    problem.SetParameterUpperBound(x, static_cast<int>(12 + d), upper(d));
  }
}

ceres::Solver::Options solver_options(const IkOptions& options) {
  ceres::Solver::Options o;
  o.minimizer_type = ceres::TRUST_REGION;
  o.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
  o.linear_solver_type = ceres::DENSE_QR;
  o.max_num_iterations = options.max_iterations;
  o.function_tolerance = options.function_tolerance;
  o.num_threads = 1;
  o.logging_type = ceres::SILENT;
  o.minimizer_progress_to_stdout = false;
  return o;
}

double rms_mm(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets, const FramePose& pose,
              std::size_t* used) {
  const auto fk = forward_kinematics(model, pose.q, scales, pose.root);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < targets.weights.size(); ++m) {
    if (!(targets.weights[m] > 0.0)) continue;
    sum += (kMetersToMm * (fk.markers[m] - targets.positions[m])).squaredNorm();
    ++count;
  }
  if (used != nullptr) *used = count;
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(sum / static_cast<double>(count));
}

FramePose clamp_pose(const SkeletonModel& model, FramePose pose) {
  pose.q = pose.q.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
  return pose;
}

}  // namespace

void IkOptions::check() const {
  if (!(temporal_weight >= 0.0)) throw ValidationError("IK temporal weight must be non-negative");
  if (!(function_tolerance > 0.0)) throw ValidationError("IK function tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("IK iteration cap must be at least 1");
  if (max_calibration_frames < 1) throw ValidationError("IK needs at least one calibration frame");
  if (min_markers_per_frame < 3) throw ValidationError("IK needs at least 3 markers per frame");
}

std::size_t FrameTargets::num_active() const {
  return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
}

FrameTargets make_frame_targets(const SkeletonModel& model, const Pose3DSequence& observed, std::size_t frame,
                                const std::map<std::string, double>& keypoint_weights) {
  FrameTargets t;
  t.positions.assign(model.markers.size(), Eigen::Vector3d::Zero());
  t.weights.assign(model.markers.size(), 0.0);
  for (std::size_t m = 0; m < model.markers.size(); ++m) {
    const auto k = observed.keypoint_index(model.markers[m].name);
    if (!k) continue;
    const auto& p = observed.at(frame, *k);
    if (!p.valid || !p.position.allFinite()) continue;
    double w = 1.0;
    if (auto it = keypoint_weights.find(model.markers[m].name); it != keypoint_weights.end()) w = it->second;
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("keypoint weight for '" + model.markers[m].name + "' must be finite and non-negative");
    }
    t.positions[m] = p.position;
    t.weights[m] = w;
  }
  return t;
}

FramePose zero_pose_initialization(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets) {
  FramePose pose;
  pose.q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_dofs));
  pose = clamp_pose(model, pose);
  const auto rest = forward_kinematics(model, pose.q, scales, RootPose{});

  auto try_align = [&](bool pelvis_only) -> std::optional<SimilarityTransform> {
    std::vector<bool> valid(model.markers.size());
    std::size_t count = 0;
    for (std::size_t m = 0; m < valid.size(); ++m) {
      valid[m] = targets.weights[m] > 0.0 && (!pelvis_only || model.markers[m].segment == 0);
      count += valid[m] ? 1 : 0;
    }
    if (count < 3) return std::nullopt;
    const auto r = try_procrustes_align(rest.markers, targets.positions, valid, ProcrustesOptions{false, 1e-9});
    if (!r) return std::nullopt;
    return r->transform;
  };

  auto transform = try_align(true);
  if (!transform) transform = try_align(false);
  if (transform) {
    pose.root.rotation = transform->rotation;
    pose.root.translation = transform->translation;
    return pose;
  }
  Eigen::Vector3d shift = Eigen::Vector3d::Zero();
  std::size_t count = 0;
  for (std::size_t m = 0; m < targets.weights.size(); ++m) {
    if (!(targets.weights[m] > 0.0)) continue;
    shift += targets.positions[m] - rest.markers[m];
    ++count;
  }
  if (count > 0) pose.root.translation = shift / static_cast<double>(count);
  return pose;
}

double frame_objective(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets,
                       const FramePose& pose, const Eigen::VectorXd* prior, double mu) {
  const auto fk = forward_kinematics(model, pose.q, scales, pose.root);
  double cost = 0.0;
  for (std::size_t m = 0; m < targets.weights.size(); ++m) {
    if (!(targets.weights[m] > 0.0)) continue;
    cost += targets.weights[m] * (kMetersToMm * (fk.markers[m] - targets.positions[m])).squaredNorm();
  }
  if (prior != nullptr && mu > 0.0) cost += mu * (pose.q - *prior).squaredNorm();
  return cost;
}

FrameFit fit_frame(const SkeletonModel& model, const ScaleSet& scales, const FrameTargets& targets,
                   const FramePose* warm_start, const Eigen::VectorXd* prior, const IkOptions& options) {
  if (targets.num_active() < options.min_markers_per_frame) {
    throw ValidationError("fit_frame: fewer than " + std::to_string(options.min_markers_per_frame) + " valid markers");
  }
  const double mu = options.temporal_weight;
  FramePose start = zero_pose_initialization(model, scales, targets);
  if (warm_start != nullptr) {
    const FramePose warm = clamp_pose(model, *warm_start);
    if (frame_objective(model, scales, targets, warm, prior, mu) < frame_objective(model, scales, targets, start, prior, mu))
      start = warm;
  }

  auto x = pack(start);
  auto s = scale_vector(scales);
  ceres::Problem problem;
  add_frame_block(problem, model, targets, prior, mu, x.data(), s.data());
  problem.SetParameterBlockConstant(s.data());
  ceres::Solver::Summary summary;
  ceres::Solve(solver_options(options), &problem, &summary);

  FrameFit fit;
  fit.pose = unpack(x.data(), model.num_dofs);
  fit.pose.root.rotation = nearest_rotation(fit.pose.root.rotation);
  fit.cost = frame_objective(model, scales, targets, fit.pose, prior, mu);
  fit.rms_error_mm = rms_mm(model, scales, targets, fit.pose, &fit.markers_used);
  fit.iterations = summary.num_successful_steps + summary.num_unsuccessful_steps;
  fit.converged = summary.termination_type == ceres::CONVERGENCE;
  return fit;
}

std::size_t IkResult::num_flagged() const {
  return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const FrameFit& f) { return f.flagged(); }));
}

IkResult fit_pose_sequence(const SkeletonModel& model, const Pose3DSequence& observed,
                           const std::map<std::string, double>& keypoint_weights, const IkOptions& options) {
  options.check();
  std::size_t shared = 0;
  for (const auto& m : model.markers) shared += observed.keypoint_index(m.name) ? 1 : 0;
  if (shared == 0) throw ValidationError("observed keypoints share no names with the skeleton markers");
  for (const auto& [name, w] : keypoint_weights) {
    if (!model.marker_index(name)) throw ValidationError("keypoint weight given for unknown marker '" + name + "'");
  }

  std::vector<FrameTargets> targets;
  targets.reserve(observed.num_frames);
  std::vector<std::size_t> usable;
  for (std::size_t f = 0; f < observed.num_frames; ++f) {
    targets.push_back(make_frame_targets(model, observed, f, keypoint_weights));
    if (targets.back().num_active() >= options.min_markers_per_frame) usable.push_back(f);
  }
  if (usable.size() < options.min_calibration_frames) {
    throw ScaleCalibrationError("scale calibration needs at least " + std::to_string(options.min_calibration_frames) +
                                " frames with " + std::to_string(options.min_markers_per_frame) +
                                " or more valid markers; found " + std::to_string(usable.size()));
  }

  IkResult result;
  const std::size_t n_cal = std::min(options.max_calibration_frames, usable.size());
  for (std::size_t i = 0; i < n_cal; ++i) {
    const std::size_t pick = n_cal == 1 ? 0 : (i * (usable.size() - 1) + (n_cal - 1) / 2) / (n_cal - 1);
    result.calibration_frames.push_back(usable[pick]);
  }

  // Stage 0: unit-scale poses to initialize calibration.
  std::vector<FramePose> cal_poses;
  {
    const ScaleSet unit;
    const FramePose* warm = nullptr;
    for (std::size_t f : result.calibration_frames) {
      cal_poses.push_back(fit_frame(model, unit, targets[f], warm, nullptr, options).pose);
      warm = &cal_poses.back();
    }
  }

  // Stage 1: joint scale and pose calibration.
  {
    // One contiguous buffer: Ceres orders elimination groups by block
    // address, so this keeps the solve independent of heap layout.
    const std::size_t block = 12 + model.num_dofs;
    std::vector<double> blocks(block * cal_poses.size());
    auto s = scale_vector(ScaleSet{});
    ceres::Problem problem;
    auto* ordering = new ceres::ParameterBlockOrdering;
    for (std::size_t i = 0; i < cal_poses.size(); ++i) {
      double* x = blocks.data() + i * block;
      const auto packed = pack(clamp_pose(model, cal_poses[i]));
      std::copy(packed.begin(), packed.end(), x);
      add_frame_block(problem, model, targets[result.calibration_frames[i]], nullptr, 0.0, x, s.data());
      ordering->AddElementToGroup(x, 0);
    }
    ordering->AddElementToGroup(s.data(), 1);
    for (int i = 0; i < static_cast<int>(kNumScaleParams); ++i) {
      problem.SetParameterLowerBound(s.data(), i, ScaleSet::kLower);
      problem.SetParameterUpperBound(s.data(), i, ScaleSet::kUpper);
    }
    auto opts = solver_options(options);
    opts.linear_solver_type = ceres::DENSE_SCHUR;
    opts.linear_solver_ordering.reset(ordering);
    ceres::Solver::Summary summary;
    ceres::Solve(opts, &problem, &summary);
    result.scales = scale_set_from_vector(s.data());
    result.scales.clamp_to_bounds();

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cal_poses.size(); ++i) {
      std::size_t used = 0;
      const double rms = rms_mm(model, result.scales, targets[result.calibration_frames[i]],
                                unpack(blocks.data() + i * block, model.num_dofs), &used);
      sum += rms * rms * static_cast<double>(used);
      count += used;
    }
    if (count > 0) result.calibration_rms_mm = std::sqrt(sum / static_cast<double>(count));
  }

  // Stage 2: sequential tracking with fixed scales.
  result.frames.resize(observed.num_frames);
  const FrameFit* previous = nullptr;
  for (std::size_t f = 0; f < observed.num_frames; ++f) {
    FrameFit& out = result.frames[f];
    if (targets[f].num_active() < options.min_markers_per_frame) {
      if (previous != nullptr) {
        out.pose = previous->pose;
      } else {
        out.pose.q = clamp_pose(model, {RootPose{}, Eigen::VectorXd::Zero(model.num_dofs)}).q;
      }
      out.carried = true;
      out.rms_error_mm = rms_mm(model, result.scales, targets[f], out.pose, &out.markers_used);
    } else {
      const FramePose* warm = previous != nullptr ? &previous->pose : nullptr;
      const Eigen::VectorXd* prior = previous != nullptr ? &previous->pose.q : nullptr;
      out = fit_frame(model, result.scales, targets[f], warm, prior, options);
      if (!out.converged && previous != nullptr) {
        out.pose = previous->pose;
        out.carried = true;
        out.cost = frame_objective(model, result.scales, targets[f], out.pose, prior, options.temporal_weight);
        out.rms_error_mm = rms_mm(model, result.scales, targets[f], out.pose, &out.markers_used);
      }
    }
    previous = &out;
  }
  return result;
}

}  // namespace mvmocap
