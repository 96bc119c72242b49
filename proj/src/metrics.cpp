#include "mvmocap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mvmocap/error.hpp"

namespace mvmocap {

namespace {

const ReprojectionSequence* find_reprojection(const std::vector<ReprojectionSequence>& reprojected,
                                              const std::string& camera_id) {
  for (const auto& r : reprojected)
    if (r.camera_id == camera_id) return &r;
  return nullptr;
}

bool masked_in(const std::vector<bool>& mask, std::size_t k) { return mask.empty() || mask[k]; }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<bool> KeypointMask::apply(const std::vector<std::string>& keypoint_names) const {
  std::vector<bool> out(keypoint_names.size());
  for (std::size_t k = 0; k < keypoint_names.size(); ++k) {
    const auto& n = keypoint_names[k];
    const bool included = include.empty() || std::find(include.begin(), include.end(), n) != include.end();
    const bool excluded = std::find(exclude.begin(), exclude.end(), n) != exclude.end();
    out[k] = included && !excluded;
  }
  return out;
}

std::vector<ErrorSample> collect_error_samples(const std::vector<DetectionSequence>& detected,
                                               const std::vector<ReprojectionSequence>& reprojected,
                                               const std::vector<bool>& keypoint_mask) {
  std::vector<ErrorSample> samples;
  for (std::size_t c = 0; c < detected.size(); ++c) {
    const auto& det = detected[c];
    const auto* rep = find_reprojection(reprojected, det.camera_id);
    if (rep == nullptr) throw ValidationError("no reprojection for camera '" + det.camera_id + "'");
    if (rep->keypoint_names != det.keypoint_names || rep->num_frames != det.num_frames) {
      throw ValidationError("reprojection for camera '" + det.camera_id + "' does not match detection shape");
    }
    if (!keypoint_mask.empty() && keypoint_mask.size() != det.num_keypoints()) {
      throw ValidationError("keypoint mask size does not match keypoint count");
    }
    for (std::size_t f = 0; f < det.num_frames; ++f) {
      for (std::size_t k = 0; k < det.num_keypoints(); ++k) {
        if (!masked_in(keypoint_mask, k)) continue;
        const auto& d = det.at(f, k);
        const auto& r = rep->at(f, k);
        if (!(d.confidence > 0.0) || !r) continue;
        samples.push_back({(Eigen::Vector2d(d.u, d.v) - *r).norm(), d.confidence, f, c, k});
      }
    }
  }
  return samples;
}

ReprojectionErrorResult reprojection_error(const std::vector<DetectionSequence>& detected,
                                           const std::vector<ReprojectionSequence>& reprojected,
                                           const std::vector<bool>& keypoint_mask) {
  ReprojectionErrorResult out;
  if (detected.empty()) return out;
  out.keypoint_names = detected.front().keypoint_names;
  const std::size_t n_kp = out.keypoint_names.size();
  const std::size_t n_cam = detected.size();
  for (const auto& det : detected) {
    if (det.keypoint_names != out.keypoint_names) {
      throw ValidationError("detections for camera '" + det.camera_id + "' have a different keypoint set");
    }
  }

  const auto samples = collect_error_samples(detected, reprojected, keypoint_mask);
  std::vector<double> sums(n_kp * n_cam, 0.0);
  std::vector<std::size_t> counts(n_kp * n_cam, 0);
  for (const auto& s : samples) {
    sums[s.keypoint * n_cam + s.camera] += s.error_px;
    ++counts[s.keypoint * n_cam + s.camera];
  }

  std::size_t possible = 0;
  for (const auto& det : detected)
    for (std::size_t k = 0; k < n_kp; ++k)
      if (masked_in(keypoint_mask, k)) possible += det.num_frames;
  out.total_samples = samples.size();
  out.missing_samples = possible - samples.size();

  out.per_keypoint.assign(n_kp, std::nullopt);
  out.sample_counts.assign(n_kp, 0);
  std::vector<double> defined;
  for (std::size_t k = 0; k < n_kp; ++k) {
    if (!masked_in(keypoint_mask, k)) continue;
    std::vector<double> camera_means;
    for (std::size_t c = 0; c < n_cam; ++c) {
      const std::size_t n = counts[k * n_cam + c];
      out.sample_counts[k] += n;
      if (n > 0) camera_means.push_back(sums[k * n_cam + c] / static_cast<double>(n));
    }
    if (camera_means.empty()) continue;
    out.per_keypoint[k] = mean_of(camera_means);
    defined.push_back(*out.per_keypoint[k]);
  }
  if (!defined.empty()) out.mean = mean_of(defined);
  return out;
}

std::optional<double> geometric_consistency(std::span<const double> errors_px, std::span<const double> confidences,
                                            double d, double lambda) {
  if (errors_px.size() != confidences.size()) throw ValidationError("GC: errors and confidences differ in length");
  if (!(d > 0.0)) throw ValidationError("GC: threshold d must be positive");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("GC: lambda must be in [0, 1)");
  std::size_t conditioned = 0, below = 0;
  for (std::size_t i = 0; i < errors_px.size(); ++i) {
    if (!(confidences[i] > lambda)) continue;
    ++conditioned;
    if (errors_px[i] < d) ++below;
  }
  if (conditioned == 0) return std::nullopt;
  return static_cast<double>(below) / static_cast<double>(conditioned);
}

std::optional<double> geometric_consistency(std::span<const ErrorSample> samples, double d, double lambda,
                                            GcAggregation aggregation) {
  if (aggregation == GcAggregation::kPooled) {
    std::vector<double> e, c;
    e.reserve(samples.size());
    c.reserve(samples.size());
    for (const auto& s : samples) {
      e.push_back(s.error_px);
      c.push_back(s.confidence);
    }
    return geometric_consistency(e, c, d, lambda);
  }
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_camera;
  for (const auto& s : samples) {
    by_camera[s.camera].first.push_back(s.error_px);
    by_camera[s.camera].second.push_back(s.confidence);
  }
  std::vector<double> per_camera;
  for (const auto& [cam, ec] : by_camera) {
    if (auto v = geometric_consistency(ec.first, ec.second, d, lambda)) per_camera.push_back(*v);
  }
  if (per_camera.empty()) {
    if (!(d > 0.0)) throw ValidationError("GC: threshold d must be positive");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("GC: lambda must be in [0, 1)");
    return std::nullopt;
  }
  return mean_of(per_camera);
}

PositionErrorResult position_error(const Pose3DSequence& monocular, const Pose3DSequence& reference,
                                   const KeypointMask& mask, const ProcrustesOptions& options) {
  if (monocular.num_frames != reference.num_frames) {
    throw ValidationError("position error: monocular has " + std::to_string(monocular.num_frames) +
                          " frames, reference has " + std::to_string(reference.num_frames));
  }
  PositionErrorResult out;
  const auto ref_mask = mask.apply(reference.keypoint_names);
  std::vector<std::size_t> ref_idx, mono_idx;
  for (std::size_t k = 0; k < reference.num_keypoints(); ++k) {
    if (!ref_mask[k]) continue;
    if (auto m = monocular.keypoint_index(reference.keypoint_names[k])) {
      out.keypoint_names.push_back(reference.keypoint_names[k]);
      ref_idx.push_back(k);
      mono_idx.push_back(*m);
    }
  }
  const std::size_t n = out.keypoint_names.size();
  if (n == 0) throw ValidationError("position error: no shared keypoints between monocular and reference");

  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  std::vector<Eigen::Vector3d> src(n), tgt(n);
  std::vector<bool> valid(n);
  for (std::size_t f = 0; f < reference.num_frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = monocular.at(f, mono_idx[i]);
      const auto& r = reference.at(f, ref_idx[i]);
      valid[i] = m.valid && r.valid;
      src[i] = m.position;
      tgt[i] = r.position;
    }
    const auto aligned = try_procrustes_align(src, tgt, valid, options);
    if (!aligned) {
      ++out.frames_excluded;
      continue;
    }
    ++out.frames_used;
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      sums[i] += 1000.0 * (aligned->aligned[i] - tgt[i]).norm();
      ++counts[i];
    }
  }

  out.per_keypoint.assign(n, std::nullopt);
  std::vector<double> defined;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) continue;
    out.per_keypoint[i] = sums[i] / static_cast<double>(counts[i]);
    defined.push_back(*out.per_keypoint[i]);
  }
  if (!defined.empty()) out.mean = mean_of(defined);
  return out;
}

void MetricOptions::check() const {
  if (gc_thresholds_px.empty()) throw ValidationError("at least one GC threshold is required");
  for (double d : gc_thresholds_px)
    if (!(d > 0.0)) throw ValidationError("GC thresholds must be positive");
  if (!(confidence_lambda >= 0.0 && confidence_lambda < 1.0)) {
    throw ValidationError("confidence lambda must be in [0, 1)");
  }
}

MetricReport compute_metric_report(const std::vector<DetectionSequence>& detected,
                                   const std::vector<ReprojectionSequence>& reprojected, const MetricOptions& options,
                                   const std::optional<PositionErrorResult>& position) {
  options.check();
  MetricReport report;
  if (detected.empty()) throw ValidationError("metric report needs at least one detection sequence");
  const auto& names = detected.front().keypoint_names;
  const auto mask = options.mask.apply(names);
  report.n_frames = detected.front().num_frames;
  report.n_cameras = detected.size();

  const auto reproj = reprojection_error(detected, reprojected, mask);
  const auto samples = collect_error_samples(detected, reprojected, mask);
  report.mean_reprojection_error_px = reproj.mean;
  report.n_samples = samples.size();

  std::vector<std::vector<ErrorSample>> by_keypoint(names.size());
  for (const auto& s : samples) by_keypoint[s.keypoint].push_back(s);

  for (double d : options.gc_thresholds_px) {
    const GcKey key{d, options.confidence_lambda};
    report.gc[key] = geometric_consistency(samples, d, options.confidence_lambda, options.gc_aggregation);
  }
  if (position) report.mean_position_error_mm = position->mean;

  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!mask[k]) continue;
    KeypointMetrics km;
    km.name = names[k];
    km.reprojection_error_px = reproj.per_keypoint[k];
    for (double d : options.gc_thresholds_px) {
      km.gc[GcKey{d, options.confidence_lambda}] =
          geometric_consistency(by_keypoint[k], d, options.confidence_lambda, options.gc_aggregation);
    }
    if (position) {
      for (std::size_t i = 0; i < position->keypoint_names.size(); ++i) {
        if (position->keypoint_names[i] == names[k]) km.position_error_mm = position->per_keypoint[i];
      }
    }
    report.per_keypoint.push_back(std::move(km));
  }
  return report;
}

}  // namespace mvmocap
