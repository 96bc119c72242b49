#include "mvmocap/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvmocap/error.hpp"

namespace mvmocap {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Excursion {
  std::size_t start;
  std::size_t end;
  int direction;
};

// Zigzag segmentation: a turn is confirmed once the signal retreats from the
// running extremum by at least `threshold`.
std::vector<Excursion> find_excursions(const std::vector<double>& v, double threshold) {
  std::vector<Excursion> out;
  if (v.size() < 2) return out;
  int dir = 0;
  std::size_t start = 0, cand = 0, lo = 0, hi = 0;
  for (std::size_t t = 1; t < v.size(); ++t) {
    const double x = v[t];
    if (dir == 0) {
      if (x < v[lo]) lo = t;
      if (x > v[hi]) hi = t;
      if (x - v[lo] >= threshold && lo < t) {
        dir = 1, start = lo, cand = t;
      } else if (v[hi] - x >= threshold && hi < t) {
        dir = -1, start = hi, cand = t;
      }
      continue;
    }
    if ((dir > 0 && x > v[cand]) || (dir < 0 && x < v[cand])) {
      cand = t;
    } else if (std::abs(v[cand] - x) >= threshold) {
      out.push_back({start, cand, dir});
      start = cand;
      cand = t;
      dir = -dir;
    }
  }
  if (dir != 0 && std::abs(v[cand] - v[start]) >= threshold) out.push_back({start, cand, dir});
  return out;
}

double window_range(const std::vector<double>& v, std::size_t a, std::size_t b) {
  const auto [mn, mx] = std::minmax_element(v.begin() + static_cast<std::ptrdiff_t>(a),
                                            v.begin() + static_cast<std::ptrdiff_t>(b) + 1);
  return *mx - *mn;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

std::vector<double> biquad_forward(const std::vector<double>& x, const double b[3], const double a[3]) {
  std::vector<double> y(x.size());
  double x1 = x.front(), x2 = x.front(), y1 = x.front(), y2 = x.front();
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = b[0] * x[i] + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2;
    x2 = x1, x1 = x[i];
    y2 = y1, y1 = y[i];
  }
  return y;
}

}  // namespace

const std::vector<double>& JointTrajectory::series(const std::string& name) const {
  for (std::size_t i = 0; i < angle_names.size(); ++i)
    if (angle_names[i] == name) return values_deg[i];
  throw ValidationError("trajectory has no angle '" + name + "'");
}

bool JointTrajectory::has(const std::string& name) const {
  return std::find(angle_names.begin(), angle_names.end(), name) != angle_names.end();
}

std::vector<double> lowpass_filtfilt(const std::vector<double>& x, double cutoff_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) throw ValidationError("low-pass: sample rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz)) {
    throw ValidationError("low-pass: cutoff must lie in (0, Nyquist)");
  }
  if (x.size() < 2) return x;
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  const double b[3] = {k * k * norm, 2.0 * k * k * norm, k * k * norm};
  const double a[3] = {1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - std::numbers::sqrt2 * k + k * k) * norm};

  // Odd reflection padding at both ends.
  const std::size_t pad = std::min<std::size_t>(x.size() - 1, 9);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[x.size() - 1 - i]);

  auto y = biquad_forward(ext, b, a);
  std::reverse(y.begin(), y.end());
  y = biquad_forward(y, b, a);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

JointTrajectory extract_joint_trajectories(const IkResult& fit, const SkeletonModel& model,
                                           const std::vector<std::string>& angles, double frame_rate,
                                           const SmoothingOptions& smoothing) {
  if (!(frame_rate > 0.0)) throw ValidationError("trajectory frame rate must be positive");
  JointTrajectory traj;
  traj.frame_rate = frame_rate;
  traj.angle_names = angles.empty() ? model.dof_names() : angles;
  for (const auto& f : fit.frames) traj.flagged.push_back(f.flagged());

  for (const auto& name : traj.angle_names) {
    const auto d = model.dof_index(name);
    if (!d) throw ValidationError("unknown joint angle '" + name + "'");
    std::vector<double> series;
    series.reserve(fit.frames.size());
    for (const auto& f : fit.frames) {
      if (static_cast<std::size_t>(f.pose.q.size()) != model.num_dofs) {
        throw ValidationError("fit result does not match the skeleton's degrees of freedom");
      }
      series.push_back(f.pose.q(static_cast<Eigen::Index>(*d)) * kRadToDeg);
    }
    if (smoothing.lowpass_cutoff_hz) {
      series = lowpass_filtfilt(series, *smoothing.lowpass_cutoff_hz, frame_rate);
      const auto& ax = model.dof(*d);
      for (double& v : series) v = std::clamp(v, ax.lower * kRadToDeg, ax.upper * kRadToDeg);
    }
    traj.values_deg.push_back(std::move(series));
  }
  return traj;
}

std::string knee_event_label_name(KneeEventLabel label) {
  switch (label) {
    case KneeEventLabel::kIsolated:
      return "isolated";
    case KneeEventLabel::kSynergisticMirrored:
      return "synergistic_mirrored";
    case KneeEventLabel::kOther:
      break;
  }
  return "other";
}

std::vector<KneeEvent> classify_knee_events(const JointTrajectory& trajectory, const KneeEventParams& params) {
  if (!(params.event_threshold_deg > 0.0) || !(params.isolation_threshold_deg > 0.0)) {
    throw ValidationError("event thresholds must be positive");
  }
  for (const auto* name : {&params.left_knee, &params.right_knee}) {
    if (!trajectory.has(*name)) throw ValidationError("knee event classification needs angle '" + *name + "'");
  }
  if (!trajectory.has(params.left_hip) && !trajectory.has(params.right_hip)) {
    throw ValidationError("knee event classification needs an ipsilateral hip angle");
  }

  struct Side {
    std::string name;
    const std::string* knee;
    const std::string* contra;
    const std::string* hip;
  };
  const Side sides[2] = {{"left", &params.left_knee, &params.right_knee, &params.left_hip},
                         {"right", &params.right_knee, &params.left_knee, &params.right_hip}};

  std::vector<KneeEvent> per_side[2];
  for (int s = 0; s < 2; ++s) {
    if (!trajectory.has(*sides[s].hip)) continue;
    const auto& knee = trajectory.series(*sides[s].knee);
    const auto& contra = trajectory.series(*sides[s].contra);
    const auto& hip = trajectory.series(*sides[s].hip);
    for (const auto& ex : find_excursions(knee, params.event_threshold_deg)) {
      if (ex.end - ex.start + 1 < params.min_window_frames) continue;
      KneeEvent e;
      e.start_frame = ex.start;
      e.end_frame = ex.end;
      e.side = sides[s].name;
      e.direction = ex.direction;
      e.knee_excursion_deg = std::abs(knee[ex.end] - knee[ex.start]);
      e.contralateral_excursion_deg = window_range(contra, ex.start, ex.end);
      e.hip_excursion_deg = window_range(hip, ex.start, ex.end);
      const double iso = params.isolation_threshold_deg;
      if (e.contralateral_excursion_deg < iso && e.hip_excursion_deg < iso) {
        e.label = KneeEventLabel::kIsolated;
      } else if (e.contralateral_excursion_deg >= iso && sign_of(contra[ex.end] - contra[ex.start]) == ex.direction &&
                 e.hip_excursion_deg >= iso) {
        e.label = KneeEventLabel::kSynergisticMirrored;
      }
      for (std::size_t f = ex.start; f <= ex.end; ++f) e.flagged = e.flagged || trajectory.flagged[f];
      per_side[s].push_back(e);
    }
  }

  std::vector<KneeEvent> events;
  std::vector<bool> right_used(per_side[1].size(), false);
  for (const auto& left : per_side[0]) {
    std::optional<std::size_t> match;
    if (params.merge_bilateral) {
      for (std::size_t j = 0; j < per_side[1].size() && !match; ++j) {
        const auto& right = per_side[1][j];
        if (right_used[j] || right.direction != left.direction) continue;
        const std::size_t lo = std::max(left.start_frame, right.start_frame);
        const std::size_t hi = std::min(left.end_frame, right.end_frame);
        const std::size_t shorter = std::min(left.end_frame - left.start_frame, right.end_frame - right.start_frame);
        if (hi > lo && 2 * (hi - lo) >= shorter) match = j;
      }
    }
    if (!match) {
      events.push_back(left);
      continue;
    }
    right_used[*match] = true;
    const auto& right = per_side[1][*match];
    KneeEvent merged = left.knee_excursion_deg >= right.knee_excursion_deg ? left : right;
    merged.side = "bilateral";
    merged.start_frame = std::min(left.start_frame, right.start_frame);
    merged.end_frame = std::max(left.end_frame, right.end_frame);
    merged.flagged = left.flagged || right.flagged;
    if (left.label == KneeEventLabel::kSynergisticMirrored || right.label == KneeEventLabel::kSynergisticMirrored) {
      merged.label = KneeEventLabel::kSynergisticMirrored;
    } else if (left.label == KneeEventLabel::kIsolated && right.label == KneeEventLabel::kIsolated) {
      merged.label = KneeEventLabel::kIsolated;
    } else {
      merged.label = KneeEventLabel::kOther;
    }
    events.push_back(merged);
  }
  for (std::size_t j = 0; j < per_side[1].size(); ++j)
    if (!right_used[j]) events.push_back(per_side[1][j]);

  std::stable_sort(events.begin(), events.end(),
                   [](const KneeEvent& a, const KneeEvent& b) { return a.start_frame < b.start_frame; });
  return events;
}

}  // namespace mvmocap
