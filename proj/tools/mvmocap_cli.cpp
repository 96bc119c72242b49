#include <CLI11.hpp>
#include <charconv>
#include <iostream>

#include "mvmocap/error.hpp"
#include "mvmocap/pipeline.hpp"

using namespace mvmocap;

namespace {

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ValidationError(what + ": '" + text + "' is not a number");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// name[:noise_px[:monocular_noise_mm]]
SimulatedMethod parse_method_spec(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() > 3) throw ValidationError("method spec '" + text + "' must be name[:noise_px[:monocular_mm]]");
  SimulatedMethod m;
  m.name = parts[0];
  if (parts.size() > 1 && !parts[1].empty()) m.noise_px = parse_number(parts[1], "method " + m.name + " noise");
  if (parts.size() > 2 && !parts[2].empty()) m.monocular_noise_mm = parse_number(parts[2], "method " + m.name + " monocular noise");
  return m;
}

struct TriangulationFlags {
  double huber = TriangulationOptions{}.huber_threshold;
  int max_iterations = TriangulationOptions{}.max_iterations;

  void add(CLI::App* cmd) {
    cmd->add_option("--huber", huber, "Huber threshold in robust residual scale units")->capture_default_str();
    cmd->add_option("--irls-iterations", max_iterations, "Maximum IRLS iterations")->capture_default_str();
  }
  TriangulationOptions options(int workers) const {
    TriangulationOptions o;
    o.huber_threshold = huber;
    o.max_iterations = max_iterations;
    o.workers = workers;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view markerless motion capture: triangulation, evaluation and kinematic fitting"};
  app.set_config("--config", "", "TOML or INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic multi-camera scene");
  SimulateConfig sim_cfg;
  std::string sim_template = "random";
  std::vector<std::string> sim_methods;
  std::string sim_keypoints;
  double sim_noise_px = 0.0;
  bool sim_fixed_scales = false;
  sim->add_option("--cameras", sim_cfg.scene.n_cameras, "Number of cameras on the ring")->capture_default_str();
  sim->add_option("--frames", sim_cfg.scene.duration_frames, "Number of frames")->capture_default_str();
  sim->add_option("--fps", sim_cfg.scene.frame_rate, "Frame rate")->capture_default_str();
  sim->add_option("--noise-px", sim_noise_px, "Isotropic pixel noise sigma")->capture_default_str();
  sim->add_option("--occlusion", sim_cfg.scene.occlusion_rate, "Per-detection occlusion probability")->capture_default_str();
  sim->add_option("--radius", sim_cfg.scene.ring_radius_m, "Camera ring radius in meters")->capture_default_str();
  sim->add_option("--height", sim_cfg.scene.camera_height_m, "Camera height in meters")->capture_default_str();
  sim->add_option("--seed", sim_cfg.scene.seed, "Random seed")->capture_default_str();
  sim->add_option("--template", sim_template, "random, static, isolated_knee_flexion or mirrored_knee_extension")
      ->capture_default_str();
  sim->add_flag("--fixed-scales", sim_fixed_scales, "Keep unit segment scales");
  sim->add_option("--methods", sim_methods, "Detection methods as name[:noise_px[:monocular_mm]]")->delimiter(',');
  sim->add_option("--keypoints", sim_keypoints, "Comma-separated subset of model markers");
  sim->add_option("--model", sim_cfg.model_path, "Skeleton model file");
  sim->add_option("--session", sim_cfg.session_id, "Session id")->capture_default_str();
  sim->add_option("--trial", sim_cfg.trial_id, "Trial id")->capture_default_str();
  sim->add_option("--output-dir", sim_cfg.output_dir, "Scene directory")->required();

  // triangulate
  auto* tri = app.add_subcommand("triangulate", "Triangulate one method of a trial");
  TriangulateConfig tri_cfg;
  TriangulationFlags tri_flags;
  int tri_workers = 1;
  tri->add_option("--manifest", tri_cfg.manifest, "Trial manifest")->required();
  tri->add_option("--method", tri_cfg.method, "Method name; optional when the manifest has one");
  tri->add_option("--workers", tri_workers, "Worker threads")->capture_default_str();
  tri->add_option("--output-dir", tri_cfg.output_dir, "Output directory");
  tri_flags.add(tri);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Compute metrics and statistics across methods and trials");
  EvaluateConfig ev_cfg;
  TriangulationFlags ev_tri;
  std::string ev_unit = "trial";
  std::string ev_aggregation = "pooled";
  std::string ev_front;
  std::string ev_exclude;
  bool ev_no_gate = false;
  ev->add_option("--manifest", ev_cfg.manifests, "Trial manifest or directory searched for manifest.json")
      ->required()
      ->take_all();
  ev->add_option("--method", ev_cfg.methods, "Restrict to these methods")->delimiter(',');
  ev->add_option("--gc-thresholds", ev_cfg.metrics.gc_thresholds_px, "GC pixel thresholds")
      ->delimiter(',')
      ->capture_default_str();
  ev->add_option("--confidence-lambda", ev_cfg.metrics.confidence_lambda, "GC confidence cutoff")->capture_default_str();
  ev->add_option("--gc-aggregation", ev_aggregation, "pooled or per_camera_mean")->capture_default_str();
  ev->add_option("--alpha", ev_cfg.stats.alpha, "Significance level")->capture_default_str();
  ev->add_flag("--ungated-pairwise", ev_no_gate, "Run pairwise tests even without a significant omnibus test");
  ev->add_option("--unit", ev_unit, "Statistical unit: trial or session")->capture_default_str();
  ev->add_option("--front-camera", ev_front, "Front camera id for position error; overrides manifests");
  ev->add_option("--exclude-keypoints", ev_exclude, "Comma-separated keypoints to drop; overrides manifest masks");
  ev->add_option("--workers", ev_cfg.workers, "Trials processed concurrently")->capture_default_str();
  ev->add_option("--output-dir", ev_cfg.output_dir, "Report directory")->required();
  ev_tri.add(ev);

  // ikfit
  auto* ik = app.add_subcommand("ikfit", "Fit the scalable skeleton and classify knee events");
  IkfitConfig ik_cfg;
  TriangulationFlags ik_tri;
  std::string ik_manifest, ik_pose;
  double ik_fps = 0.0, ik_lowpass = 0.0;
  ik->add_option("--manifest", ik_manifest, "Trial manifest; triangulates the chosen method");
  ik->add_option("--method", ik_cfg.method, "Method name");
  ik->add_option("--pose3d", ik_pose, "Pose3D CSV instead of a manifest");
  ik->add_option("--model", ik_cfg.model_path, "Skeleton model file");
  ik->add_option("--fps", ik_fps, "Frame rate; defaults to the calibration frame rate, else 29");
  ik->add_option("--angles", ik_cfg.angles, "Joint angles written to trajectory.csv")->delimiter(',');
  ik->add_option("--temporal-weight", ik_cfg.ik.temporal_weight, "Weight of the previous-frame prior")
      ->capture_default_str();
  ik->add_option("--lowpass-hz", ik_lowpass, "Zero-phase low-pass cutoff applied to angles");
  ik->add_option("--event-threshold", ik_cfg.events.event_threshold_deg, "Minimum knee excursion in degrees")
      ->capture_default_str();
  ik->add_option("--output-dir", ik_cfg.output_dir, "Output directory")->required();
  ik_tri.add(ik);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) {
      const auto motion = motion_template_from_name(sim_template);
      if (!motion) throw ValidationError("unknown template '" + sim_template + "'");
      sim_cfg.motion = *motion;
      sim_cfg.randomize_scales = !sim_fixed_scales;
      sim_cfg.scene.pixel_noise_px = sim_noise_px;
      if (!sim_methods.empty()) {
        sim_cfg.methods.clear();
        for (const auto& m : sim_methods) sim_cfg.methods.push_back(parse_method_spec(m));
      }
      if (!sim_keypoints.empty()) sim_cfg.keypoints = split(sim_keypoints, ',');
      cmd_simulate(sim_cfg);
      std::cout << "wrote " << sim_cfg.output_dir.string() << "\n";
    } else if (tri->parsed()) {
      tri_cfg.triangulation = tri_flags.options(tri_workers);
      const auto r = cmd_triangulate(tri_cfg);
      std::cout << "wrote " << r.pose_path.string() << "\n";
    } else if (ev->parsed()) {
      ev_cfg.triangulation = ev_tri.options(1);
      if (ev_aggregation == "pooled") {
        ev_cfg.metrics.gc_aggregation = GcAggregation::kPooled;
      } else if (ev_aggregation == "per_camera_mean") {
        ev_cfg.metrics.gc_aggregation = GcAggregation::kPerCameraMean;
      } else {
        throw ValidationError("--gc-aggregation must be pooled or per_camera_mean");
      }
      if (ev_unit == "trial") {
        ev_cfg.unit = StatUnit::kTrial;
      } else if (ev_unit == "session") {
        ev_cfg.unit = StatUnit::kSession;
      } else {
        throw ValidationError("--unit must be trial or session");
      }
      ev_cfg.stats.gate_pairwise_on_omnibus = !ev_no_gate;
      if (!ev_front.empty()) ev_cfg.front_camera = ev_front;
      if (!ev_exclude.empty()) {
        KeypointMask mask;
        mask.name = "custom";
        mask.exclude = split(ev_exclude, ',');
        ev_cfg.mask_override = mask;
      }
      const auto r = cmd_evaluate(ev_cfg);
      for (const auto& s : r.stats)
        if (!s.notice.empty()) std::cerr << s.metric << ": " << s.notice << "\n";
      std::cout << "wrote " << ev_cfg.output_dir.string() << "\n";
    } else if (ik->parsed()) {
      if (!ik_manifest.empty()) ik_cfg.manifest = ik_manifest;
      if (!ik_pose.empty()) ik_cfg.pose3d = ik_pose;
      if (ik->count("--fps")) ik_cfg.frame_rate = ik_fps;
      if (ik->count("--lowpass-hz")) ik_cfg.smoothing.lowpass_cutoff_hz = ik_lowpass;
      ik_cfg.triangulation = ik_tri.options(1);
      const auto r = cmd_ikfit(ik_cfg);
      std::cout << "fitted " << r.fit.frames.size() << " frames, " << r.fit.num_flagged() << " flagged, "
                << r.events.size() << " events\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
