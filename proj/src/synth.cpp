#include "mvmocap/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mvmocap/error.hpp"

namespace mvmocap {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr std::uint64_t kMotionStream = 0x6d6f74696f6eULL;
constexpr std::uint64_t kMonocularStream = 0x6d6f6e6fULL;

struct Posture {
  const char* suffix;
  double center_deg;
  double max_amplitude_deg;
};

// Resting supine infant posture: hips and knees flexed, elbows bent.
constexpr Posture kPosture[] = {
    {"hip_flexion", 60.0, 35.0},      {"knee_flexion", 70.0, 35.0},  {"elbow_flexion", 70.0, 30.0},
    {"shoulder_flexion", 30.0, 30.0}, {"hip_abduction", 15.0, 15.0},
};
constexpr double kDefaultAmplitudeDeg = 15.0;

Posture posture_for(const std::string& dof) {
  for (const auto& p : kPosture)
    if (dof.ends_with(p.suffix)) return p;
  return {"", 0.0, kDefaultAmplitudeDeg};
}

// Supine: body anterior (x) up, superior (z) toward +x, left (y) toward -y.
Eigen::Matrix3d supine_rotation() {
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d(0, 0, 1);
  r.col(1) = Eigen::Vector3d(0, -1, 0);
  r.col(2) = Eigen::Vector3d(1, 0, 0);
  return r;
}

// Triangle wave in [0, 1]; 0 at frame 0, 1 at frame `half`.
double triangle(std::size_t frame, std::size_t half) {
  const std::size_t phase = frame % (2 * half);
  return phase <= half ? static_cast<double>(phase) / static_cast<double>(half)
                       : static_cast<double>(2 * half - phase) / static_cast<double>(half);
}

Eigen::VectorXd resting_pose(const SkeletonModel& model) {
  Eigen::VectorXd q(static_cast<Eigen::Index>(model.num_dofs));
  for (std::size_t d = 0; d < model.num_dofs; ++d) {
    const auto& ax = model.dof(d);
    q(static_cast<Eigen::Index>(d)) = std::clamp(posture_for(ax.name).center_deg * kDeg, ax.lower, ax.upper);
  }
  return q;
}

void set_dof(const SkeletonModel& model, Eigen::VectorXd& q, const std::string& name, double value_deg) {
  const auto d = model.dof_index(name);
  if (!d) throw ValidationError("motion template needs joint '" + name + "'");
  const auto& ax = model.dof(*d);
  q(static_cast<Eigen::Index>(*d)) = std::clamp(value_deg * kDeg, ax.lower, ax.upper);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

void SceneSpec::validate() const {
  if (n_cameras < 2) throw ValidationError("scene needs at least 2 cameras, got " + std::to_string(n_cameras));
  if (!(ring_radius_m > 0.0)) throw ValidationError("ring radius must be positive");
  if (!std::isfinite(camera_height_m) || !target.allFinite()) throw ValidationError("camera height and target must be finite");
  if (!(pixel_noise_px >= 0.0) || !std::isfinite(pixel_noise_px)) throw ValidationError("pixel noise must be >= 0");
  if (!(occlusion_rate >= 0.0 && occlusion_rate < 1.0)) throw ValidationError("occlusion rate must be in [0, 1)");
  const auto& c = confidence;
  if (!(0.0 <= c.low_min && c.low_min <= c.low_max && c.low_max <= 1.0 && 0.0 <= c.high_min &&
        c.high_min <= c.high_max && c.high_max <= 1.0)) {
    throw ValidationError("confidence ranges must be ordered within [0, 1]");
  }
  if (!(0.0 <= c.offset_min_px && c.offset_min_px <= c.offset_max_px)) {
    throw ValidationError("occlusion offset range must be ordered and non-negative");
  }
  if (duration_frames < 1) throw ValidationError("scene needs at least one frame");
  if (!(frame_rate > 0.0)) throw ValidationError("frame rate must be positive");
  if (!(focal_px > 0.0) || image_width < 1 || image_height < 1) throw ValidationError("invalid intrinsics");
}

CameraRig make_camera_ring(const SceneSpec& spec) {
  spec.validate();
  CameraRig rig;
  rig.frame_rate = spec.frame_rate;
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  for (std::size_t i = 0; i < spec.n_cameras; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(spec.n_cameras);
    const Eigen::Vector3d center(spec.target.x() + spec.ring_radius_m * std::cos(theta),
                                 spec.target.y() + spec.ring_radius_m * std::sin(theta), spec.camera_height_m);
    const Eigen::Vector3d z = (spec.target - center).normalized();
    const Eigen::Vector3d x = z.cross(up).normalized();
    const Eigen::Vector3d y = z.cross(x);

    CameraParams cam;
    char id[16];
    std::snprintf(id, sizeof id, "cam%02zu", i);
    cam.camera_id = id;
    cam.fx = cam.fy = spec.focal_px;
    cam.cx = 0.5 * spec.image_width;
    cam.cy = 0.5 * spec.image_height;
    cam.distortion = spec.distortion;
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * center;
    rig.cameras.push_back(cam);
  }
  rig.validate();
  return rig;
}

std::optional<MotionTemplate> motion_template_from_name(const std::string& name) {
  if (name == "random") return MotionTemplate::kRandom;
  if (name == "static") return MotionTemplate::kStatic;
  if (name == "isolated_knee_flexion") return MotionTemplate::kIsolatedKneeFlexion;
  if (name == "mirrored_knee_extension") return MotionTemplate::kMirroredKneeExtension;
  return std::nullopt;
}

std::string motion_template_name(MotionTemplate t) {
  switch (t) {
    case MotionTemplate::kRandom:
      return "random";
    case MotionTemplate::kStatic:
      return "static";
    case MotionTemplate::kIsolatedKneeFlexion:
      return "isolated_knee_flexion";
    case MotionTemplate::kMirroredKneeExtension:
      return "mirrored_knee_extension";
  }
  return "random";
}

GroundTruthMotion generate_motion(const SkeletonModel& model, std::uint64_t seed, std::size_t duration_frames,
                                  const MotionOptions& options) {
  if (duration_frames < 1) throw ValidationError("motion needs at least one frame");
  if (!(options.frame_rate > 0.0)) throw ValidationError("frame rate must be positive");
  if (!(options.max_frequency_hz > 0.0)) throw ValidationError("maximum frequency must be positive");
  if (options.template_half_period_frames < 2) throw ValidationError("template half period must be >= 2 frames");

  std::mt19937_64 rng(derive_seed(seed, kMotionStream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  GroundTruthMotion gt;
  if (options.randomize_scales) {
    for (double& g : gt.scales.group) g = uniform(0.9, 1.1);
    gt.scales.overall = uniform(0.9, 1.1);
  }

  const Eigen::VectorXd rest = resting_pose(model);
  const double dt = 1.0 / options.frame_rate;
  const Eigen::Matrix3d base = supine_rotation();
  const Eigen::Vector3d base_t = options.target + Eigen::Vector3d(0.0, 0.0, 0.05);

  struct Wave {
    double amplitude, frequency, phase;
  };
  std::vector<std::vector<Wave>> waves(model.num_dofs);
  Eigen::VectorXd centers = rest;
  if (options.motion == MotionTemplate::kRandom) {
    const double f_max = std::min(options.max_frequency_hz, 0.5 * options.frame_rate);
    for (std::size_t d = 0; d < model.num_dofs; ++d) {
      const auto& ax = model.dof(d);
      const auto posture = posture_for(ax.name);
      double& c = centers(static_cast<Eigen::Index>(d));
      const double margin = 0.05 * (ax.upper - ax.lower);
      c = std::clamp(c + uniform(-5.0, 5.0) * kDeg, ax.lower + margin, ax.upper - margin);
      const double room = std::min(c - ax.lower, ax.upper - c) - margin;
      const double budget = std::max(0.0, std::min(room, posture.max_amplitude_deg * kDeg)) * uniform(0.6, 1.0);
      const int count = 1 + static_cast<int>(uniform(0.0, 3.0));
      std::vector<double> shares(static_cast<std::size_t>(std::min(count, 3)));
      double total = 0.0;
      for (double& s : shares) total += (s = uniform(0.2, 1.0));
      for (double s : shares)
        waves[d].push_back({budget * s / total, uniform(0.1, f_max), uniform(0.0, 2.0 * std::numbers::pi)});
    }
  }
  Wave root_waves[6];
  for (auto& w : root_waves) w = {uniform(0.5, 1.0), uniform(0.05, 0.4), uniform(0.0, 2.0 * std::numbers::pi)};

  const std::size_t half = options.template_half_period_frames;
  gt.poses.resize(duration_frames);
  for (std::size_t f = 0; f < duration_frames; ++f) {
    const double t = static_cast<double>(f) * dt;
    FramePose& pose = gt.poses[f];
    pose.q = centers;
    pose.root.rotation = base;
    pose.root.translation = base_t;
    switch (options.motion) {
      case MotionTemplate::kRandom: {
        for (std::size_t d = 0; d < model.num_dofs; ++d) {
          double v = centers(static_cast<Eigen::Index>(d));
          for (const auto& w : waves[d]) v += w.amplitude * std::sin(2.0 * std::numbers::pi * w.frequency * t + w.phase);
          const auto& ax = model.dof(d);
          pose.q(static_cast<Eigen::Index>(d)) = std::clamp(v, ax.lower, ax.upper);
        }
        Eigen::Vector3d wobble, sway;
        for (int i = 0; i < 3; ++i) {
          const auto& a = root_waves[i];
          const auto& b = root_waves[3 + i];
          wobble(i) = 5.0 * kDeg * a.amplitude * std::sin(2.0 * std::numbers::pi * a.frequency * t + a.phase);
          sway(i) = 0.01 * b.amplitude * std::sin(2.0 * std::numbers::pi * b.frequency * t + b.phase);
        }
        sway.z() *= 0.2;
        pose.root.rotation = rotation_from_axis_angle(wobble) * base;
        pose.root.translation = base_t + sway;
        break;
      }
      case MotionTemplate::kStatic:
        break;
      case MotionTemplate::kIsolatedKneeFlexion:
        set_dof(model, pose.q, "left_knee_flexion", 30.0 + 40.0 * triangle(f, half));
        break;
      case MotionTemplate::kMirroredKneeExtension: {
        const double s = triangle(f, half);
        set_dof(model, pose.q, "left_knee_flexion", 70.0 - 30.0 * s);
        set_dof(model, pose.q, "right_knee_flexion", 70.0 - 30.0 * s);
        set_dof(model, pose.q, "left_hip_flexion", 60.0 - 15.0 * s);
        set_dof(model, pose.q, "right_hip_flexion", 60.0 - 15.0 * s);
        break;
      }
    }
  }

  if (options.motion == MotionTemplate::kIsolatedKneeFlexion ||
      options.motion == MotionTemplate::kMirroredKneeExtension) {
    const bool isolated = options.motion == MotionTemplate::kIsolatedKneeFlexion;
    for (std::size_t k = 0; (k + 1) * half < duration_frames; ++k) {
      const int rising = k % 2 == 0 ? 1 : -1;
      gt.scripted.push_back({k * half, (k + 1) * half, isolated ? rising : -rising,
                             isolated ? KneeEventLabel::kIsolated : KneeEventLabel::kSynergisticMirrored});
    }
  }

  gt.markers.keypoint_names = model.marker_names();
  gt.markers.resize(duration_frames);
  for (std::size_t f = 0; f < duration_frames; ++f) {
    const auto fk = forward_kinematics(model, gt.poses[f].q, gt.scales, gt.poses[f].root);
    for (std::size_t m = 0; m < fk.markers.size(); ++m) gt.markers.at(f, m) = {fk.markers[m], true, 0};
  }
  return gt;
}

std::vector<DetectionSequence> render_detections(const Pose3DSequence& markers, const CameraRig& rig,
                                                 const SceneSpec& spec) {
  spec.validate();
  for (const auto& p : markers.points) {
    if (p.valid && !p.position.allFinite()) throw ValidationError("render_detections: non-finite marker position");
  }
  const auto& cm = spec.confidence;
  std::vector<DetectionSequence> out;
  for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
    const auto& cam = rig.cameras[c];
    std::mt19937_64 rng(derive_seed(spec.seed, c + 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DetectionSequence det;
    det.camera_id = cam.camera_id;
    det.keypoint_names = markers.keypoint_names;
    det.resize(markers.num_frames);
    for (std::size_t f = 0; f < markers.num_frames; ++f) {
      for (std::size_t k = 0; k < markers.num_keypoints(); ++k) {
        const double nu = gauss(rng), nv = gauss(rng);
        const double occ = unit(rng), conf = unit(rng), mag = unit(rng), dir = unit(rng);
        const auto& p = markers.at(f, k);
        if (!p.valid) continue;
        const auto px = try_project(p.position, cam);
        if (!px) continue;
        Detection2D& d = det.at(f, k);
        d.u = px->x() + spec.pixel_noise_px * nu;
        d.v = px->y() + spec.pixel_noise_px * nv;
        if (occ < spec.occlusion_rate) {
          d.confidence = cm.low_min + (cm.low_max - cm.low_min) * conf;
          const double r = cm.offset_min_px + (cm.offset_max_px - cm.offset_min_px) * mag;
          const double a = 2.0 * std::numbers::pi * dir;
          d.u += r * std::cos(a);
          d.v += r * std::sin(a);
        } else {
          d.confidence = cm.high_min + (cm.high_max - cm.high_min) * conf;
        }
      }
    }
    out.push_back(std::move(det));
  }
  return out;
}

Pose3DSequence simulate_monocular_estimate(const Pose3DSequence& markers, const CameraParams& front, double scale,
                                           double noise_mm, std::uint64_t seed) {
  if (!(scale > 0.0)) throw ValidationError("monocular scale must be positive");
  if (!(noise_mm >= 0.0)) throw ValidationError("monocular noise must be >= 0");
  std::mt19937_64 rng(derive_seed(seed, kMonocularStream));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Pose3DSequence out;
  out.keypoint_names = markers.keypoint_names;
  out.resize(markers.num_frames);
  for (std::size_t f = 0; f < markers.num_frames; ++f) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    for (std::size_t k = 0; k < markers.num_keypoints(); ++k) {
      const auto& p = markers.at(f, k);
      if (!p.valid) continue;
      centroid += front.to_camera(p.position);
      ++count;
    }
    if (count > 0) centroid /= static_cast<double>(count);
    for (std::size_t k = 0; k < markers.num_keypoints(); ++k) {
      const Eigen::Vector3d noise(gauss(rng), gauss(rng), gauss(rng));
      const auto& p = markers.at(f, k);
      if (!p.valid) continue;
      out.at(f, k).position = scale * (front.to_camera(p.position) - centroid) + 1e-3 * noise_mm * noise;
      out.at(f, k).valid = true;
    }
  }
  return out;
}

}  // namespace mvmocap
