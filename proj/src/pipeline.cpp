#include "mvmocap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <set>
#include <thread>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;
using detail::format_double;

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_identifier(const std::string& value, const std::string& what) {
  if (value.empty()) throw ValidationError(what + " must not be empty");
  for (char c : value) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    if (!ok) throw ValidationError(what + " '" + value + "' may only contain letters, digits, '_', '-' and '.'");
  }
  if (value == "." || value == "..") throw ValidationError(what + " '" + value + "' is not allowed");
}

SkeletonModel load_model(const fs::path& path) {
  return load_skeleton_model(path.empty() ? default_skeleton_model_path() : path);
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct MethodInputs {
  std::vector<DetectionSequence> detections;  // manifest camera order
  std::optional<Pose3DSequence> monocular;
};

MethodInputs load_method_inputs(const TrialManifest& manifest, const MethodEntry& entry) {
  MethodInputs in;
  for (const auto& [cam, path] : entry.detections) {
    const auto resolved = manifest.resolve(path);
    DetectionSequence det;
    try {
      det = load_detections(resolved);
    } catch (const ValidationError& e) {
      throw ValidationError(resolved.string() + ": " + e.what());
    }
    if (det.camera_id != cam) {
      throw ValidationError(resolved.string() + ": file declares camera '" + det.camera_id + "' but the manifest lists it as '" +
                            cam + "'");
    }
    in.detections.push_back(std::move(det));
  }
  if (entry.monocular_3d) {
    const auto resolved = manifest.resolve(*entry.monocular_3d);
    try {
      in.monocular = load_pose3d(resolved);
    } catch (const ValidationError& e) {
      throw ValidationError(resolved.string() + ": " + e.what());
    }
  }
  return in;
}

CameraRig load_rig(const TrialManifest& manifest) {
  const auto path = manifest.resolve(manifest.calibration);
  try {
    return load_calibration(path);
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw ValidationError(path.string() + ": " + what);
  }
}

const MethodEntry& pick_method(const TrialManifest& manifest, const std::string& method) {
  if (!method.empty()) return manifest.method(method);
  if (manifest.methods.size() != 1) {
    throw ValidationError("manifest " + manifest.session_id + "/" + manifest.trial_id +
                          " has several methods; choose one with --method");
  }
  return manifest.methods.front();
}

std::string format_joint_angles(const SkeletonModel& model, const GroundTruthMotion& gt) {
  std::vector<std::string> header{"frame", "root_tx", "root_ty", "root_tz", "root_rx", "root_ry", "root_rz"};
  for (const auto& n : model.dof_names()) header.push_back(n);
  std::string out = csv_join(header);
  for (std::size_t f = 0; f < gt.poses.size(); ++f) {
    const auto& p = gt.poses[f];
    std::vector<std::string> row{std::to_string(f)};
    for (int i = 0; i < 3; ++i) row.push_back(format_double(p.root.translation(i)));
    const Eigen::Vector3d aa = axis_angle_from_rotation(p.root.rotation);
    for (int i = 0; i < 3; ++i) row.push_back(format_double(aa(i)));
    for (Eigen::Index d = 0; d < p.q.size(); ++d) row.push_back(format_double(p.q(d) * kRadToDeg));
    out += csv_join(row);
  }
  return out;
}

json scales_json(const ScaleSet& s) {
  json groups = json::object();
  for (std::size_t g = 0; g < kNumScaleGroups; ++g) groups[kScaleGroupNames[g]] = s.group[g];
  return {{"groups", groups}, {"overall", s.overall}};
}

}  // namespace

std::vector<fs::path> expand_manifest_paths(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::recursive_directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json") found.push_back(entry.path());
      }
      if (found.empty()) throw ValidationError("no manifest.json found under " + in.string());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in)) {
      out.push_back(in);
    } else {
      throw ValidationError("manifest not found: " + in.string());
    }
  }
  if (out.empty()) throw ValidationError("no manifest given");
  return out;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const SimulateConfig& config) {
  config.scene.validate();
  if (config.output_dir.empty()) throw ValidationError("an output directory is required");
  check_identifier(config.session_id, "session id");
  check_identifier(config.trial_id, "trial id");
  if (config.methods.empty()) throw ValidationError("at least one method is required");
  std::set<std::string> names;
  for (const auto& m : config.methods) {
    check_identifier(m.name, "method name");
    if (!names.insert(m.name).second) throw ValidationError("duplicate method '" + m.name + "'");
    if (m.noise_px && !(*m.noise_px >= 0.0 && std::isfinite(*m.noise_px))) {
      throw ValidationError("pixel noise of method '" + m.name + "' must be finite and >= 0");
    }
    if (m.monocular_noise_mm && !(*m.monocular_noise_mm >= 0.0 && std::isfinite(*m.monocular_noise_mm))) {
      throw ValidationError("monocular noise of method '" + m.name + "' must be finite and >= 0");
    }
  }
  const auto model = load_model(config.model_path);
  for (const auto& k : config.keypoints) {
    if (!model.marker_index(k)) throw ValidationError("unknown keypoint '" + k + "'");
  }

  const auto rig = make_camera_ring(config.scene);
  MotionOptions motion;
  motion.motion = config.motion;
  motion.frame_rate = config.scene.frame_rate;
  motion.target = config.scene.target;
  motion.randomize_scales = config.randomize_scales;
  const auto gt = generate_motion(model, config.scene.seed, config.scene.duration_frames, motion);
  const auto markers = config.keypoints.empty() ? gt.markers : select_keypoints(gt.markers, config.keypoints);

  TrialManifest manifest;
  manifest.session_id = config.session_id;
  manifest.trial_id = config.trial_id;
  manifest.calibration = "calibration.json";
  manifest.front_camera = rig.cameras.front().camera_id;
  manifest.keypoint_mask.name = "non_facial";
  for (const auto& f : default_facial_keypoints())
    if (markers.keypoint_index(f)) manifest.keypoint_mask.exclude.push_back(f);

  struct Rendered {
    std::vector<DetectionSequence> detections;
    std::optional<Pose3DSequence> monocular;
  };
  std::vector<Rendered> rendered;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const auto& m = config.methods[i];
    SceneSpec spec = config.scene;
    spec.pixel_noise_px = m.noise_px.value_or(config.scene.pixel_noise_px);
    spec.seed = i == 0 ? config.scene.seed : derive_seed(config.scene.seed, 0x100 + i);
    Rendered r;
    r.detections = render_detections(markers, rig, spec);
    if (m.monocular_noise_mm) {
      r.monocular = simulate_monocular_estimate(markers, rig.cameras.front(), 0.85, *m.monocular_noise_mm,
                                                derive_seed(config.scene.seed, 0x200 + i));
    }
    MethodEntry entry;
    entry.name = m.name;
    for (const auto& det : r.detections) entry.detections[det.camera_id] = "detections/" + m.name + "/" + det.camera_id + ".csv";
    if (r.monocular) entry.monocular_3d = "monocular/" + m.name + ".csv";
    manifest.methods.push_back(entry);
    rendered.push_back(std::move(r));
  }

  const fs::path& out = config.output_dir;
  save_calibration(rig, out / "calibration.json");
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    for (const auto& det : rendered[i].detections) {
      save_detections(det, out / "detections" / config.methods[i].name / (det.camera_id + ".csv"));
    }
    if (rendered[i].monocular) save_pose3d(*rendered[i].monocular, out / "monocular" / (config.methods[i].name + ".csv"));
  }
  save_pose3d(markers, out / "truth" / "markers3d.csv");
  detail::write_file(out / "truth" / "joint_angles.csv", format_joint_angles(model, gt));
  detail::write_file(out / "truth" / "scales.json", scales_json(gt.scales).dump(2) + "\n");
  std::string spans = "start_frame,end_frame,direction,label\n";
  for (const auto& s : gt.scripted) {
    spans += csv_join({std::to_string(s.start_frame), std::to_string(s.end_frame), std::to_string(s.direction),
                       knee_event_label_name(s.label)});
  }
  detail::write_file(out / "truth" / "scripted_spans.csv", spans);

  const auto& sc = config.scene;
  json scene = {{"n_cameras", sc.n_cameras},
                {"ring_radius_m", sc.ring_radius_m},
                {"camera_height_m", sc.camera_height_m},
                {"target", {sc.target.x(), sc.target.y(), sc.target.z()}},
                {"pixel_noise_px", sc.pixel_noise_px},
                {"occlusion_rate", sc.occlusion_rate},
                {"seed", sc.seed},
                {"duration_frames", sc.duration_frames},
                {"frame_rate", sc.frame_rate},
                {"motion", motion_template_name(config.motion)},
                {"randomize_scales", config.randomize_scales},
                {"keypoints", markers.keypoint_names}};
  json methods = json::array();
  for (const auto& m : config.methods) {
    methods.push_back({{"name", m.name},
                       {"noise_px", m.noise_px.value_or(sc.pixel_noise_px)},
                       {"monocular_noise_mm", optional_json(m.monocular_noise_mm)}});
  }
  scene["methods"] = methods;
  detail::write_file(out / "scene.json", scene.dump(2) + "\n");
  save_manifest(manifest, out / "manifest.json");
}

// ------------------------------------------------------------- triangulate

TriangulateResult cmd_triangulate(const TriangulateConfig& config) {
  config.triangulation.check();
  const auto manifest = load_manifest(config.manifest);
  const auto rig = load_rig(manifest);
  manifest.validate(rig);
  const auto& entry = pick_method(manifest, config.method);
  const auto inputs = load_method_inputs(manifest, entry);

  TriangulationDiagnostics diag;
  TriangulateResult result;
  result.pose = robust_triangulate(inputs.detections, rig, config.triangulation, &diag);

  const fs::path out = config.output_dir.empty() ? manifest.base_dir / "triangulated" / entry.name : config.output_dir;
  result.pose_path = out / "pose3d.csv";
  result.diagnostics_path = out / "weights.csv";
  save_pose3d(result.pose, result.pose_path);
  detail::write_file(result.diagnostics_path, format_triangulation_diagnostics(diag));
  return result;
}

// ---------------------------------------------------------------- evaluate

EvaluateResult cmd_evaluate(const EvaluateConfig& config) {
  config.metrics.check();
  config.triangulation.check();
  if (!(config.stats.alpha > 0.0 && config.stats.alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (config.workers < 1) throw ValidationError("workers must be at least 1");
  if (config.output_dir.empty()) throw ValidationError("an output directory is required");

  struct Trial {
    TrialManifest manifest;
    CameraRig rig;
    std::vector<std::pair<std::string, MethodInputs>> methods;
  };
  std::vector<Trial> trials;
  std::set<std::string> seen_methods;
  for (const auto& path : expand_manifest_paths(config.manifests)) {
    Trial t;
    t.manifest = load_manifest(path);
    if (config.front_camera) t.manifest.front_camera = config.front_camera;
    t.rig = load_rig(t.manifest);
    t.manifest.validate(t.rig);
    for (const auto& entry : t.manifest.methods) {
      if (!config.methods.empty() &&
          std::find(config.methods.begin(), config.methods.end(), entry.name) == config.methods.end()) {
        continue;
      }
      seen_methods.insert(entry.name);
      t.methods.emplace_back(entry.name, load_method_inputs(t.manifest, entry));
    }
    trials.push_back(std::move(t));
  }
  for (const auto& m : config.methods) {
    if (!seen_methods.contains(m)) throw ValidationError("method '" + m + "' is not in any manifest");
  }
  std::set<std::pair<std::string, std::string>> trial_keys;
  for (const auto& t : trials) {
    if (!trial_keys.insert({t.manifest.session_id, t.manifest.trial_id}).second) {
      throw ValidationError("trial " + t.manifest.session_id + "/" + t.manifest.trial_id + " appears twice");
    }
  }

  struct Task {
    std::size_t trial;
    std::size_t method;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < trials.size(); ++i)
    for (std::size_t j = 0; j < trials[i].methods.size(); ++j) tasks.push_back({i, j});

  std::vector<MetricReport> reports(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  TriangulationOptions tri = config.triangulation;
  tri.workers = 1;
  auto run = [&](std::size_t k) {
    const auto& trial = trials[tasks[k].trial];
    const auto& [name, inputs] = trial.methods[tasks[k].method];
    MetricOptions opts = config.metrics;
    opts.mask = config.mask_override.value_or(trial.manifest.keypoint_mask);
    const auto pose = robust_triangulate(inputs.detections, trial.rig, tri);
    const auto reprojected = reproject(pose, trial.rig);
    std::optional<PositionErrorResult> position;
    if (inputs.monocular) position = position_error(*inputs.monocular, pose, opts.mask);
    auto report = compute_metric_report(inputs.detections, reprojected, opts, position);
    report.session_id = trial.manifest.session_id;
    report.trial_id = trial.manifest.trial_id;
    report.method = name;
    reports[k] = std::move(report);
  };
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < tasks.size(); k = next++) {
        try {
          run(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads = std::min(config.workers, std::max<std::size_t>(tasks.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Ordered merge into one value per statistical unit, method and metric.
  const double lambda = config.metrics.confidence_lambda;
  std::vector<std::string> metrics{kReprojectionKey};
  for (double d : config.metrics.gc_thresholds_px) metrics.push_back(gc_metric_key(d));
  metrics.push_back(kPositionKey);
  std::vector<std::string> methods(seen_methods.begin(), seen_methods.end());

  auto metric_value = [&](const MetricReport& r, const std::string& metric) -> std::optional<double> {
    if (metric == kReprojectionKey) return r.mean_reprojection_error_px;
    if (metric == kPositionKey) return r.mean_position_error_mm;
    for (double d : config.metrics.gc_thresholds_px)
      if (metric == gc_metric_key(d)) return r.gc.at(GcKey{d, lambda});
    return std::nullopt;
  };
  MetricSamples samples;
  for (const auto& metric : metrics) {
    for (const auto& method : methods) {
      std::map<std::string, std::vector<double>> by_unit;  // unit id -> values
      std::vector<std::string> unit_order;
      for (const auto& r : reports) {
        if (r.method != method) continue;
        const auto v = metric_value(r, metric);
        if (!v) continue;
        const std::string unit = config.unit == StatUnit::kSession ? r.session_id : r.session_id + "/" + r.trial_id;
        if (!by_unit.contains(unit)) unit_order.push_back(unit);
        by_unit[unit].push_back(*v);
      }
      for (const auto& u : unit_order) samples[metric][method].push_back(mean_sd(by_unit[u])->mean);
    }
  }

  EvaluateResult result;
  result.reports = reports;
  for (const auto& metric : metrics) {
    std::vector<std::vector<double>> groups;
    for (const auto& method : methods) {
      const auto it = samples[metric].find(method);
      groups.push_back(it == samples[metric].end() ? std::vector<double>{} : it->second);
    }
    result.stats.push_back(stats::compare_methods(metric, methods, groups, config.stats));
  }
  result.table = build_table1(methods, metrics, samples, result.stats);

  json cfg = {{"gc_thresholds_px", config.metrics.gc_thresholds_px},
              {"confidence_lambda", lambda},
              {"gc_aggregation", config.metrics.gc_aggregation == GcAggregation::kPooled ? "pooled" : "per_camera_mean"},
              {"alpha", config.stats.alpha},
              {"gate_pairwise_on_omnibus", config.stats.gate_pairwise_on_omnibus},
              {"statistical_unit", config.unit == StatUnit::kSession ? "session" : "trial"},
              {"front_camera", config.front_camera ? json(*config.front_camera) : json("per manifest")},
              {"position_alignment", "per-frame similarity (rotation, translation, uniform scale)"},
              {"triangulation",
               {{"estimator", "huber_irls"},
                {"huber_threshold", tri.huber_threshold},
                {"max_iterations", tri.max_iterations},
                {"weight_tolerance", tri.weight_tolerance},
                {"min_sigma_px", tri.min_sigma_px},
                {"exclusion_ratio", tri.exclusion_ratio}}}};
  if (config.mask_override) {
    cfg["keypoint_mask"] = {{"name", config.mask_override->name},
                            {"include", config.mask_override->include},
                            {"exclude", config.mask_override->exclude}};
  } else {
    cfg["keypoint_mask"] = "per manifest";
  }

  json rep = json::array();
  for (const auto& r : reports) {
    json j = {{"session_id", r.session_id},     {"trial_id", r.trial_id},   {"method", r.method},
              {"n_frames", r.n_frames},         {"n_cameras", r.n_cameras}, {"n_samples", r.n_samples},
              {"reprojection_error_px", optional_json(r.mean_reprojection_error_px)},
              {"position_error_mm", optional_json(r.mean_position_error_mm)}};
    json gc = json::object();
    for (double d : config.metrics.gc_thresholds_px) gc[format_double(d)] = optional_json(r.gc.at(GcKey{d, lambda}));
    j["gc"] = gc;
    json per = json::array();
    for (const auto& k : r.per_keypoint) {
      json kj = {{"keypoint", k.name},
                 {"reprojection_error_px", optional_json(k.reprojection_error_px)},
                 {"position_error_mm", optional_json(k.position_error_mm)}};
      json kgc = json::object();
      for (double d : config.metrics.gc_thresholds_px) kgc[format_double(d)] = optional_json(k.gc.at(GcKey{d, lambda}));
      kj["gc"] = kgc;
      per.push_back(kj);
    }
    j["per_keypoint"] = per;
    rep.push_back(j);
  }
  json summary = json::object();
  for (const auto& metric : metrics) {
    json m = json::object();
    for (const auto& method : methods) {
      const auto it = samples[metric].find(method);
      const auto ms = it == samples[metric].end() ? std::nullopt : mean_sd(it->second);
      m[method] = ms ? json{{"mean", ms->mean}, {"sd", ms->sd}, {"n", ms->n}} : json(nullptr);
    }
    summary[metric] = m;
  }
  const json doc = {{"config", cfg}, {"reports", rep}, {"summary", summary}};

  const fs::path& out = config.output_dir;
  detail::write_file(out / "metrics.json", doc.dump(2) + "\n");
  detail::write_file(out / "metrics.tsv", format_metrics_tsv(reports, config.metrics.gc_thresholds_px, lambda));
  detail::write_file(out / "per_keypoint.tsv", format_per_keypoint_tsv(reports, config.metrics.gc_thresholds_px, lambda));
  detail::write_file(out / "table1.tsv", format_table1_tsv(result.table, config.stats.alpha));
  detail::write_file(out / "stats.tsv", format_stats_tsv(result.stats));
  detail::write_file(out / "stats.json", format_stats_json(result.stats));
  return result;
}

// ------------------------------------------------------------------- ikfit

IkfitResult cmd_ikfit(const IkfitConfig& config) {
  config.ik.check();
  config.triangulation.check();
  if (config.output_dir.empty()) throw ValidationError("an output directory is required");
  if (config.manifest.has_value() == config.pose3d.has_value()) {
    throw ValidationError("give exactly one of a manifest or a Pose3D file");
  }
  if (config.frame_rate && !(*config.frame_rate > 0.0)) throw ValidationError("frame rate must be positive");
  const auto model = load_model(config.model_path);
  for (const auto& a : config.angles) {
    if (!model.dof_index(a)) throw ValidationError("unknown joint angle '" + a + "'");
  }

  Pose3DSequence observed;
  double frame_rate = config.frame_rate.value_or(29.0);
  if (config.pose3d) {
    observed = load_pose3d(*config.pose3d);
  } else {
    const auto manifest = load_manifest(*config.manifest);
    const auto rig = load_rig(manifest);
    manifest.validate(rig);
    const auto inputs = load_method_inputs(manifest, pick_method(manifest, config.method));
    if (!config.frame_rate) frame_rate = rig.frame_rate;
    observed = robust_triangulate(inputs.detections, rig, config.triangulation);
  }
  if (config.smoothing.lowpass_cutoff_hz &&
      !(*config.smoothing.lowpass_cutoff_hz > 0.0 && *config.smoothing.lowpass_cutoff_hz < 0.5 * frame_rate)) {
    throw ValidationError("low-pass cutoff must lie in (0, frame_rate / 2)");
  }

  IkfitResult result;
  result.fit = fit_pose_sequence(model, observed, {}, config.ik);
  const auto full = extract_joint_trajectories(result.fit, model, {}, frame_rate, config.smoothing);
  result.events = classify_knee_events(full, config.events);
  result.trajectory =
      config.angles.empty() ? full : extract_joint_trajectories(result.fit, model, config.angles, frame_rate, config.smoothing);

  const fs::path& out = config.output_dir;
  json scales = scales_json(result.fit.scales);
  scales["calibration_frames"] = result.fit.calibration_frames;
  scales["calibration_rms_mm"] = result.fit.calibration_rms_mm;
  detail::write_file(out / "scales.json", scales.dump(2) + "\n");

  const auto& traj = result.trajectory;
  std::vector<std::string> labels(traj.num_frames());
  for (const auto& e : result.events)
    for (std::size_t f = e.start_frame; f <= e.end_frame; ++f)
      labels[f] = labels[f].empty() ? knee_event_label_name(e.label) : labels[f] + "|" + knee_event_label_name(e.label);
  std::vector<std::string> header{"frame", "time_s"};
  for (const auto& n : traj.angle_names) header.push_back(n + "_deg");
  header.push_back("flagged");
  header.push_back("event");
  std::string tcsv = csv_join(header);
  for (std::size_t f = 0; f < traj.num_frames(); ++f) {
    std::vector<std::string> row{std::to_string(f), format_double(static_cast<double>(f) / frame_rate)};
    for (const auto& series : traj.values_deg) row.push_back(format_double(series[f]));
    row.push_back(traj.flagged[f] ? "1" : "0");
    row.push_back(labels[f]);
    tcsv += csv_join(row);
  }
  detail::write_file(out / "trajectory.csv", tcsv);

  std::string ecsv = "start_frame,end_frame,side,direction,label,knee_excursion_deg,contralateral_excursion_deg,"
                     "hip_excursion_deg,flagged\n";
  for (const auto& e : result.events) {
    ecsv += csv_join({std::to_string(e.start_frame), std::to_string(e.end_frame), e.side,
                      e.direction > 0 ? "flexion" : "extension", knee_event_label_name(e.label),
                      format_double(e.knee_excursion_deg), format_double(e.contralateral_excursion_deg),
                      format_double(e.hip_excursion_deg), e.flagged ? "1" : "0"});
  }
  detail::write_file(out / "events.csv", ecsv);

  std::string rcsv = "frame,rms_error_mm,markers_used,iterations,converged,carried\n";
  for (std::size_t f = 0; f < result.fit.frames.size(); ++f) {
    const auto& fr = result.fit.frames[f];
    rcsv += csv_join({std::to_string(f), format_double(fr.rms_error_mm), std::to_string(fr.markers_used),
                      std::to_string(fr.iterations), fr.converged ? "1" : "0", fr.carried ? "1" : "0"});
  }
  detail::write_file(out / "fit_residuals.csv", rcsv);
  return result;
}

}  // namespace mvmocap
