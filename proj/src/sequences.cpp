#include "mvmocap/sequences.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

using detail::format_double;

std::vector<std::string_view> data_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  for (auto line : detail::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

// Parses "frame,<a>_s1,<a>_s2,..." where suffixes cycle through `suffixes`.
std::vector<std::string> parse_header(std::string_view header, const std::vector<std::string>& suffixes,
                                      const std::string& origin) {
  const auto cols = detail::split(header, ',');
  if (cols.empty() || detail::trim(cols[0]) != "frame") {
    throw ValidationError(origin + ": header must start with 'frame'");
  }
  const std::size_t group = suffixes.size();
  if ((cols.size() - 1) % group != 0) {
    throw ValidationError(origin + ": header column count is not a multiple of " + std::to_string(group));
  }
  std::vector<std::string> names;
  for (std::size_t c = 1; c < cols.size(); c += group) {
    std::string name;
    for (std::size_t s = 0; s < group; ++s) {
      const std::string col(detail::trim(cols[c + s]));
      const std::string suffix = "_" + suffixes[s];
      if (col.size() <= suffix.size() || !col.ends_with(suffix)) {
        throw ValidationError(origin + ": unexpected header column '" + col + "'");
      }
      const std::string stem = col.substr(0, col.size() - suffix.size());
      if (s == 0) {
        name = stem;
      } else if (stem != name) {
        throw ValidationError(origin + ": header column '" + col + "' does not match keypoint '" + name + "'");
      }
    }
    names.push_back(name);
  }
  return names;
}

void check_frame_index(std::string_view cell, std::size_t expected, const std::string& origin) {
  const long idx = detail::parse_long(cell, origin);
  if (idx != static_cast<long>(expected)) {
    throw ValidationError(origin + ": expected frame " + std::to_string(expected) + ", found " +
                          std::to_string(idx));
  }
}

template <typename Seq>
Seq select_impl(const Seq& in, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    std::size_t found = in.keypoint_names.size();
    for (std::size_t k = 0; k < in.keypoint_names.size(); ++k) {
      if (in.keypoint_names[k] == n) {
        found = k;
        break;
      }
    }
    if (found == in.keypoint_names.size()) throw ValidationError("unknown keypoint '" + n + "'");
    idx.push_back(found);
  }
  Seq out = in;
  out.keypoint_names = names;
  out.points.clear();
  out.points.reserve(in.num_frames * names.size());
  for (std::size_t f = 0; f < in.num_frames; ++f)
    for (std::size_t k : idx) out.points.push_back(in.at(f, k));
  return out;
}

}  // namespace

void DetectionSequence::resize(std::size_t frames) {
  num_frames = frames;
  points.assign(frames * keypoint_names.size(), Detection2D{});
}

void DetectionSequence::validate() const {
  if (points.size() != num_frames * keypoint_names.size()) {
    throw ValidationError("detections for camera '" + camera_id + "': point count does not match frames x keypoints");
  }
  for (const auto& p : points) {
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw ValidationError("detections for camera '" + camera_id + "': confidence outside [0, 1]");
    }
    if (p.confidence > 0.0 && !(std::isfinite(p.u) && std::isfinite(p.v))) {
      throw ValidationError("detections for camera '" + camera_id + "': non-finite coordinate");
    }
  }
}

void Pose3DSequence::resize(std::size_t frames) {
  num_frames = frames;
  points.assign(frames * keypoint_names.size(), Point3D{});
}

std::optional<std::size_t> Pose3DSequence::keypoint_index(const std::string& name) const {
  for (std::size_t k = 0; k < keypoint_names.size(); ++k)
    if (keypoint_names[k] == name) return k;
  return std::nullopt;
}

void Pose3DSequence::validate() const {
  if (points.size() != num_frames * keypoint_names.size()) {
    throw ValidationError("pose3d: point count does not match frames x keypoints");
  }
  for (const auto& p : points) {
    if (p.valid && !p.position.allFinite()) throw ValidationError("pose3d: valid point is not finite");
  }
}

Pose3DSequence select_keypoints(const Pose3DSequence& pose, const std::vector<std::string>& names) {
  return select_impl(pose, names);
}

DetectionSequence select_keypoints(const DetectionSequence& det, const std::vector<std::string>& names) {
  return select_impl(det, names);
}

std::string format_detections(const DetectionSequence& det) {
  std::ostringstream out;
  out << "# camera_id: " << det.camera_id << "\n";
  out << "frame";
  for (const auto& n : det.keypoint_names) out << ',' << n << "_u," << n << "_v," << n << "_c";
  out << '\n';
  for (std::size_t f = 0; f < det.num_frames; ++f) {
    out << f;
    for (std::size_t k = 0; k < det.num_keypoints(); ++k) {
      const auto& p = det.at(f, k);
      out << ',' << format_double(p.u) << ',' << format_double(p.v) << ',' << format_double(p.confidence);
    }
    out << '\n';
  }
  return out.str();
}

DetectionSequence parse_detections(const std::string& text, const std::string& origin) {
  const auto lines = data_lines(text);
  DetectionSequence det;
  std::size_t row = 0;
  constexpr std::string_view kTag = "# camera_id:";
  if (row < lines.size() && lines[row].starts_with(kTag)) {
    det.camera_id = std::string(detail::trim(lines[row].substr(kTag.size())));
    ++row;
  }
  if (det.camera_id.empty()) throw ValidationError(origin + ": missing '# camera_id:' line");
  if (row >= lines.size()) throw ValidationError(origin + ": missing header");
  det.keypoint_names = parse_header(lines[row++], {"u", "v", "c"}, origin);

  const std::size_t k_count = det.keypoint_names.size();
  for (; row < lines.size(); ++row) {
    const auto cells = detail::split(lines[row], ',');
    if (cells.size() != 1 + 3 * k_count) {
      throw ValidationError(origin + ": row " + std::to_string(det.num_frames) + " has wrong column count");
    }
    check_frame_index(cells[0], det.num_frames, origin);
    for (std::size_t k = 0; k < k_count; ++k) {
      det.points.push_back({detail::parse_double(cells[1 + 3 * k], origin),
                            detail::parse_double(cells[2 + 3 * k], origin),
                            detail::parse_double(cells[3 + 3 * k], origin)});
    }
    ++det.num_frames;
  }
  try {
    det.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return det;
}

DetectionSequence load_detections(const std::filesystem::path& path) {
  return parse_detections(detail::read_file(path), path.string());
}

void save_detections(const DetectionSequence& det, const std::filesystem::path& path) {
  detail::write_file(path, format_detections(det));
}

std::string format_pose3d(const Pose3DSequence& pose) {
  std::ostringstream out;
  out << "frame";
  for (const auto& n : pose.keypoint_names) out << ',' << n << "_x," << n << "_y," << n << "_z," << n << "_valid";
  out << '\n';
  for (std::size_t f = 0; f < pose.num_frames; ++f) {
    out << f;
    for (std::size_t k = 0; k < pose.num_keypoints(); ++k) {
      const auto& p = pose.at(f, k);
      if (p.valid) {
        out << ',' << format_double(p.position.x()) << ',' << format_double(p.position.y()) << ','
            << format_double(p.position.z()) << ",1";
      } else {
        out << ",nan,nan,nan,0";
      }
    }
    out << '\n';
  }
  return out.str();
}

Pose3DSequence parse_pose3d(const std::string& text, const std::string& origin) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw ValidationError(origin + ": empty pose3d file");
  Pose3DSequence pose;
  pose.keypoint_names = parse_header(lines[0], {"x", "y", "z", "valid"}, origin);
  const std::size_t k_count = pose.keypoint_names.size();
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto cells = detail::split(lines[row], ',');
    if (cells.size() != 1 + 4 * k_count) {
      throw ValidationError(origin + ": row " + std::to_string(pose.num_frames) + " has wrong column count");
    }
    check_frame_index(cells[0], pose.num_frames, origin);
    for (std::size_t k = 0; k < k_count; ++k) {
      Point3D p;
      const long valid = detail::parse_long(cells[4 + 4 * k], origin);
      if (valid != 0 && valid != 1) throw ValidationError(origin + ": valid flag must be 0 or 1");
      p.valid = valid == 1;
      if (p.valid) {
        p.position = {detail::parse_double(cells[1 + 4 * k], origin), detail::parse_double(cells[2 + 4 * k], origin),
                      detail::parse_double(cells[3 + 4 * k], origin)};
      }
      pose.points.push_back(p);
    }
    ++pose.num_frames;
  }
  try {
    pose.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return pose;
}

Pose3DSequence load_pose3d(const std::filesystem::path& path) {
  return parse_pose3d(detail::read_file(path), path.string());
}

void save_pose3d(const Pose3DSequence& pose, const std::filesystem::path& path) {
  detail::write_file(path, format_pose3d(pose));
}

}  // namespace mvmocap
