#include "mvmocap/triangulation.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double huber_weight(double scaled_residual, double threshold) {
  const double a = std::abs(scaled_residual);
  if (!std::isfinite(a)) return 0.0;
  return a <= threshold ? 1.0 : threshold / a;
}

struct ViewData {
  const CameraParams* camera;
  Eigen::Vector2d pixel;
  Eigen::Vector2d normalized;
  double confidence;
  std::size_t input_index;
};

struct LinearSolve {
  Eigen::Vector3d point;
  bool degenerate = false;
};

LinearSolve solve_dlt(const std::vector<ViewData>& views, const std::vector<double>& weights,
                      const std::vector<double>& depths, const TriangulationOptions& options) {
  std::size_t active = 0;
  for (double w : weights)
    if (w > 0.0) ++active;
  Eigen::Matrix<double, Eigen::Dynamic, 4> a(2 * active, 4);
  std::size_t row = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    const auto& cam = *views[i].camera;
    Eigen::Matrix<double, 3, 4> p;
    p.leftCols<3>() = cam.rotation;
    p.col(3) = cam.translation;
    const double s = std::sqrt(weights[i]) / depths[i];
    a.row(row++) = s * (views[i].normalized.x() * p.row(2) - p.row(0));
    a.row(row++) = s * (views[i].normalized.y() * p.row(2) - p.row(1));
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 4>> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d sv = svd.singularValues();
  const Eigen::Vector4d x = svd.matrixV().col(3);

  LinearSolve out;
  out.degenerate = !(sv(0) > 0.0) || sv(3) / sv(0) > options.degenerate_singular_ratio ||
                   sv(2) / sv(0) < options.rank_tolerance ||
                   std::abs(x(3)) < 1e-12 * x.head<3>().norm();
  out.point = out.degenerate ? Eigen::Vector3d::Zero() : Eigen::Vector3d(x.head<3>() / x(3));
  return out;
}

std::vector<double> reprojection_residuals(const std::vector<ViewData>& views, const Eigen::Vector3d& point) {
  std::vector<double> r(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto uv = try_project(point, *views[i].camera);
    r[i] = uv ? (*uv - views[i].pixel).norm() : kInf;
  }
  return r;
}

std::vector<double> robust_weights(const std::vector<ViewData>& views, const std::vector<double>& residuals,
                                   const TriangulationOptions& options) {
  const double med = median(residuals);
  std::vector<double> dev(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) dev[i] = std::abs(residuals[i] - med);
  const double mad = median(dev);
  const double sigma = std::isfinite(mad) ? std::max(options.min_sigma_px, options.mad_to_sigma * mad)
                                          : options.min_sigma_px;
  std::vector<double> w(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    w[i] = views[i].confidence * huber_weight(residuals[i] / sigma, options.huber_threshold);
  }
  return w;
}

std::vector<double> relative(const std::vector<double>& w) {
  const double mx = *std::max_element(w.begin(), w.end());
  std::vector<double> out(w.size(), 0.0);
  if (mx > 0.0)
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / mx;
  return out;
}

void update_depths(const std::vector<ViewData>& views, const Eigen::Vector3d& point, std::vector<double>& depths) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    const double z = views[i].camera->to_camera(point).z();
    if (z > 0.0 && std::isfinite(z)) depths[i] = z;
  }
}

}  // namespace

void TriangulationOptions::check() const {
  if (max_iterations < 0) throw ValidationError("max_iterations must be >= 0");
  if (!(huber_threshold > 0.0)) throw ValidationError("huber_threshold must be positive");
  if (!(min_sigma_px > 0.0)) throw ValidationError("min_sigma_px must be positive");
  if (!(exclusion_ratio >= 0.0 && exclusion_ratio < 1.0)) throw ValidationError("exclusion_ratio must be in [0, 1)");
  if (workers < 1) throw ValidationError("workers must be >= 1");
}

TriangulatedPoint triangulate_point(const std::vector<Observation>& observations,
                                    const TriangulationOptions& options) {
  TriangulatedPoint result;
  result.weights.assign(observations.size(), 0.0);

  std::vector<ViewData> views;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    if (obs.camera == nullptr || !(obs.confidence > 0.0) || !obs.pixel.allFinite()) continue;
    views.push_back({obs.camera, obs.pixel, pixel_to_normalized(obs.pixel, *obs.camera), obs.confidence, i});
  }
  result.effective_views = static_cast<int>(views.size());
  if (views.size() < 2) return result;

  std::vector<double> weights(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) weights[i] = views[i].confidence;
  std::vector<double> depths(views.size(), 1.0);

  LinearSolve solve = solve_dlt(views, weights, depths, options);
  if (solve.degenerate) {
    result.degenerate = true;
    return result;
  }
  update_depths(views, solve.point, depths);
  solve = solve_dlt(views, weights, depths, options);
  if (solve.degenerate) {
    result.degenerate = true;
    return result;
  }

  std::vector<double> previous = relative(weights);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const auto w = robust_weights(views, reprojection_residuals(views, solve.point), options);
    const auto rel = relative(w);
    double change = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) change = std::max(change, std::abs(rel[i] - previous[i]));
    if (change < options.weight_tolerance) break;
    if (*std::max_element(w.begin(), w.end()) <= 0.0) break;
    weights = w;
    previous = rel;
    update_depths(views, solve.point, depths);
    const LinearSolve next = solve_dlt(views, weights, depths, options);
    result.iterations = iter + 1;
    if (next.degenerate) {
      result.degenerate = true;
      return result;
    }
    solve = next;
  }

  // Final weights at the converged point, then exclusion.
  weights = robust_weights(views, reprojection_residuals(views, solve.point), options);
  const double max_w = *std::max_element(weights.begin(), weights.end());
  int active = 0;
  bool any_excluded = false;
  for (double& w : weights) {
    if (w > 0.0 && w >= options.exclusion_ratio * max_w) {
      ++active;
    } else {
      any_excluded = true;
      w = 0.0;
    }
  }
  result.effective_views = active;
  if (active < 2) return result;
  if (any_excluded) {
    update_depths(views, solve.point, depths);
    const LinearSolve final_solve = solve_dlt(views, weights, depths, options);
    if (final_solve.degenerate) {
      result.degenerate = true;
      return result;
    }
    solve = final_solve;
  }

  result.position = solve.point;
  result.valid = solve.point.allFinite();
  for (std::size_t i = 0; i < views.size(); ++i) result.weights[views[i].input_index] = weights[i];
  return result;
}

Pose3DSequence robust_triangulate(const std::vector<DetectionSequence>& detections, const CameraRig& rig,
                                  const TriangulationOptions& options, TriangulationDiagnostics* diagnostics) {
  options.check();
  rig.validate_for_triangulation();
  if (detections.size() < 2) {
    throw ValidationError("triangulation needs detections from at least 2 cameras, got " +
                          std::to_string(detections.size()));
  }
  const auto& ref = detections.front();
  std::set<std::string> seen;
  std::vector<std::size_t> rig_index;
  for (const auto& det : detections) {
    const auto idx = rig.find(det.camera_id);
    if (!idx) throw ValidationError("detections for camera '" + det.camera_id + "' have no calibration in the rig");
    if (!seen.insert(det.camera_id).second) {
      throw ValidationError("duplicate detections for camera '" + det.camera_id + "'");
    }
    if (det.keypoint_names != ref.keypoint_names) {
      throw ValidationError("detections for camera '" + det.camera_id + "' have a different keypoint set than camera '" +
                            ref.camera_id + "'");
    }
    if (det.num_frames != ref.num_frames) {
      throw ValidationError("detections for camera '" + det.camera_id + "' have " + std::to_string(det.num_frames) +
                            " frames, camera '" + ref.camera_id + "' has " + std::to_string(ref.num_frames));
    }
    det.validate();
    rig_index.push_back(*idx);
  }

  const std::size_t n_frames = ref.num_frames;
  const std::size_t n_kp = ref.num_keypoints();
  const std::size_t n_cam = rig.size();

  Pose3DSequence pose;
  pose.keypoint_names = ref.keypoint_names;
  pose.resize(n_frames);
  std::vector<double> weights(n_frames * n_kp * n_cam, 0.0);
  std::vector<char> degenerate(n_frames * n_kp, 0);

  auto work = [&](std::size_t frame_begin, std::size_t frame_end) {
    std::vector<Observation> obs(detections.size());
    for (std::size_t f = frame_begin; f < frame_end; ++f) {
      for (std::size_t k = 0; k < n_kp; ++k) {
        for (std::size_t c = 0; c < detections.size(); ++c) {
          const auto& d = detections[c].at(f, k);
          obs[c] = {&rig.cameras[rig_index[c]], {d.u, d.v}, d.confidence};
        }
        const auto tp = triangulate_point(obs, options);
        auto& out = pose.at(f, k);
        out.valid = tp.valid;
        out.effective_views = tp.effective_views;
        out.position = tp.valid ? tp.position : Eigen::Vector3d::Zero();
        degenerate[f * n_kp + k] = tp.degenerate ? 1 : 0;
        for (std::size_t c = 0; c < detections.size(); ++c) {
          weights[(f * n_kp + k) * n_cam + rig_index[c]] = tp.weights[c];
        }
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.workers),
                                                      std::max<std::size_t>(n_frames, 1));
  if (n_workers <= 1) {
    work(0, n_frames);
  } else {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (n_frames + n_workers - 1) / n_workers;
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n_frames, b + chunk);
      if (b < e) threads.emplace_back(work, b, e);
    }
  }

  if (diagnostics) {
    diagnostics->camera_ids.clear();
    for (const auto& cam : rig.cameras) diagnostics->camera_ids.push_back(cam.camera_id);
    diagnostics->keypoint_names = pose.keypoint_names;
    diagnostics->num_frames = n_frames;
    diagnostics->weights = std::move(weights);
    diagnostics->degenerate = std::move(degenerate);
  }
  return pose;
}

std::vector<ReprojectionSequence> reproject(const Pose3DSequence& pose, const CameraRig& rig) {
  std::vector<ReprojectionSequence> out;
  out.reserve(rig.size());
  for (const auto& cam : rig.cameras) {
    ReprojectionSequence seq;
    seq.camera_id = cam.camera_id;
    seq.keypoint_names = pose.keypoint_names;
    seq.num_frames = pose.num_frames;
    seq.points.resize(pose.points.size());
    for (std::size_t i = 0; i < pose.points.size(); ++i) {
      if (pose.points[i].valid) seq.points[i] = try_project(pose.points[i].position, cam);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::string format_triangulation_diagnostics(const TriangulationDiagnostics& diag) {
  std::ostringstream out;
  out << "frame,keypoint,degenerate";
  for (const auto& id : diag.camera_ids) out << ",w_" << id;
  out << '\n';
  const std::size_t n_kp = diag.keypoint_names.size();
  for (std::size_t f = 0; f < diag.num_frames; ++f) {
    for (std::size_t k = 0; k < n_kp; ++k) {
      out << f << ',' << diag.keypoint_names[k] << ',' << int(diag.degenerate[f * n_kp + k]);
      for (std::size_t c = 0; c < diag.camera_ids.size(); ++c) out << ',' << detail::format_double(diag.weight(f, k, c));
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace mvmocap
