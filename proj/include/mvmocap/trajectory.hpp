#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvmocap/ik.hpp"

namespace mvmocap {

struct JointTrajectory {
  std::vector<std::string> angle_names;
  std::vector<std::vector<double>> values_deg;  // [angle][frame]
  std::vector<bool> flagged;                    // per frame, from the fit
  double frame_rate = 29.0;

  std::size_t num_frames() const { return flagged.size(); }
  // Throws ValidationError for an unknown name.
  const std::vector<double>& series(const std::string& name) const;
  bool has(const std::string& name) const;
};

struct SmoothingOptions {
  std::optional<double> lowpass_cutoff_hz;  // zero-phase 2nd-order Butterworth
};

// Zero-phase Butterworth low-pass (forward-backward biquad).
std::vector<double> lowpass_filtfilt(const std::vector<double>& x, double cutoff_hz, double sample_rate_hz);

// Empty selection returns every degree of freedom. Smoothed values are
// clamped back into the joint limits.
JointTrajectory extract_joint_trajectories(const IkResult& fit, const SkeletonModel& model,
                                           const std::vector<std::string>& angles = {}, double frame_rate = 29.0,
                                           const SmoothingOptions& smoothing = {});

enum class KneeEventLabel { kIsolated, kSynergisticMirrored, kOther };
std::string knee_event_label_name(KneeEventLabel label);

struct KneeEvent {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;  // inclusive
  std::string side;           // "left", "right" or "bilateral"
  int direction = 0;          // +1 flexion, -1 extension
  double knee_excursion_deg = 0.0;
  double contralateral_excursion_deg = 0.0;
  double hip_excursion_deg = 0.0;
  KneeEventLabel label = KneeEventLabel::kOther;
  bool flagged = false;  // window contains frames the fit flagged
};

struct KneeEventParams {
  double event_threshold_deg = 20.0;
  double isolation_threshold_deg = 10.0;
  std::size_t min_window_frames = 3;
  bool merge_bilateral = true;  // join overlapping same-direction left/right events
  std::string left_knee = "left_knee_flexion";
  std::string right_knee = "right_knee_flexion";
  std::string left_hip = "left_hip_flexion";
  std::string right_hip = "right_hip_flexion";
};

// Knee excursions of at least event_threshold_deg between successive local
// extrema, labelled from the contralateral knee and ipsilateral hip over the
// same window. Events are sorted by start frame.
std::vector<KneeEvent> classify_knee_events(const JointTrajectory& trajectory, const KneeEventParams& params = {});

}  // namespace mvmocap
