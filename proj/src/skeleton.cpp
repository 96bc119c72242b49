#include "mvmocap/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <set>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

using json = nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

Eigen::Vector3d vec3(const json& node, const std::string& what) {
  if (!node.is_array() || node.size() != 3) throw ValidationError("skeleton: '" + what + "' needs 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!node[i].is_number()) throw ValidationError("skeleton: '" + what + "' has a non-numeric entry");
    v(i) = node[i].get<double>();
  }
  return v;
}

// "left_x" <-> "right_x"
std::optional<std::string> mirror_name(const std::string& name) {
  if (name.starts_with("left_")) return "right_" + name.substr(5);
  if (name.starts_with("right_")) return "left_" + name.substr(6);
  return std::nullopt;
}

}  // namespace

std::optional<ScaleGroup> scale_group_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kNumScaleGroups; ++i)
    if (name == kScaleGroupNames[i]) return static_cast<ScaleGroup>(i);
  if (name == "none") return ScaleGroup::kNone;
  return std::nullopt;
}

std::string scale_group_name(ScaleGroup group) {
  return group == ScaleGroup::kNone ? "none" : kScaleGroupNames[static_cast<std::size_t>(group)];
}

bool ScaleSet::within_bounds() const {
  auto ok = [](double s) { return s >= kLower && s <= kUpper; };
  for (double g : group)
    if (!ok(g)) return false;
  return ok(overall);
}

void ScaleSet::clamp_to_bounds() {
  for (double& g : group) g = std::clamp(g, kLower, kUpper);
  overall = std::clamp(overall, kLower, kUpper);
}

std::map<std::string, double> SkeletonModel::nominal_lengths() const {
  std::map<std::string, double> out;
  for (const auto& seg : segments)
    if (seg.parent >= 0) out[seg.name] = seg.offset.norm();
  return out;
}

int SkeletonModel::segment_index(const std::string& name) const {
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (segments[i].name == name) return static_cast<int>(i);
  return -1;
}

std::optional<std::size_t> SkeletonModel::marker_index(const std::string& name) const {
  for (std::size_t i = 0; i < markers.size(); ++i)
    if (markers[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> SkeletonModel::dof_index(const std::string& name) const {
  for (const auto& seg : segments)
    for (std::size_t a = 0; a < seg.axes.size(); ++a)
      if (seg.axes[a].name == name) return seg.first_dof + a;
  return std::nullopt;
}

std::vector<std::string> SkeletonModel::dof_names() const {
  std::vector<std::string> out;
  for (const auto& seg : segments)
    for (const auto& ax : seg.axes) out.push_back(ax.name);
  return out;
}

std::vector<std::string> SkeletonModel::marker_names() const {
  std::vector<std::string> out;
  for (const auto& m : markers) out.push_back(m.name);
  return out;
}

const JointAxis& SkeletonModel::dof(std::size_t index) const {
  for (const auto& seg : segments) {
    if (index >= seg.first_dof && index < seg.first_dof + seg.axes.size()) return seg.axes[index - seg.first_dof];
  }
  throw ValidationError("skeleton: dof index out of range");
}

Eigen::VectorXd SkeletonModel::lower_limits() const {
  Eigen::VectorXd v(num_dofs);
  for (const auto& seg : segments)
    for (std::size_t a = 0; a < seg.axes.size(); ++a) v(seg.first_dof + a) = seg.axes[a].lower;
  return v;
}

Eigen::VectorXd SkeletonModel::upper_limits() const {
  Eigen::VectorXd v(num_dofs);
  for (const auto& seg : segments)
    for (std::size_t a = 0; a < seg.axes.size(); ++a) v(seg.first_dof + a) = seg.axes[a].upper;
  return v;
}

void SkeletonModel::validate() const {
  if (segments.empty()) throw ValidationError("skeleton: no segments");
  std::set<std::string> names;
  std::set<std::string> dofs;
  int roots = 0;
  std::size_t dof_count = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (!names.insert(seg.name).second) throw ValidationError("skeleton: duplicate segment '" + seg.name + "'");
    if (seg.parent < 0) {
      ++roots;
      if (i != 0) throw ValidationError("skeleton: root segment must come first");
    } else if (static_cast<std::size_t>(seg.parent) >= i) {
      throw ValidationError("skeleton: segment '" + seg.name + "' must follow its parent");
    }
    if (seg.parent >= 0 && (seg.axes.empty() || seg.axes.size() > 3)) {
      throw ValidationError("skeleton: joint of segment '" + seg.name + "' needs 1 to 3 axes");
    }
    if (seg.first_dof != dof_count) throw ValidationError("skeleton: inconsistent dof indexing");
    for (const auto& ax : seg.axes) {
      if (!dofs.insert(ax.name).second) throw ValidationError("skeleton: duplicate dof '" + ax.name + "'");
      if (!(ax.lower < ax.upper)) throw ValidationError("skeleton: dof '" + ax.name + "' needs lower < upper");
      if (std::abs(ax.axis.norm() - 1.0) > 1e-9) throw ValidationError("skeleton: dof '" + ax.name + "' axis not unit");
    }
    dof_count += seg.axes.size();
  }
  if (roots != 1) throw ValidationError("skeleton: exactly one root segment required");
  if (dof_count != num_dofs) throw ValidationError("skeleton: dof count mismatch");
  if (!segments.front().axes.empty()) throw ValidationError("skeleton: the root carries the 6-DOF pose, not axes");

  for (const auto& seg : segments) {
    if (auto mirrored = mirror_name(seg.name)) {
      const int other = segment_index(*mirrored);
      if (other < 0) throw ValidationError("skeleton: segment '" + seg.name + "' has no mirror '" + *mirrored + "'");
      if (segments[other].scale_group != seg.scale_group) {
        throw ValidationError("skeleton: segments '" + seg.name + "' and '" + *mirrored + "' must share a scale group");
      }
    }
  }

  std::set<std::string> marker_names_seen;
  for (const auto& m : markers) {
    if (!marker_names_seen.insert(m.name).second) throw ValidationError("skeleton: duplicate marker '" + m.name + "'");
    if (m.segment < 0 || static_cast<std::size_t>(m.segment) >= segments.size()) {
      throw ValidationError("skeleton: marker '" + m.name + "' refers to a missing segment");
    }
  }
}

static SkeletonModel parse_model_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("skeleton parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("segments") || !doc["segments"].is_array()) {
    throw ValidationError("skeleton: expected an object with a 'segments' array");
  }
  SkeletonModel model;
  model.name = doc.value("name", "skeleton");

  for (const auto& node : doc["segments"]) {
    Segment seg;
    seg.name = node.at("name").get<std::string>();
    if (node.contains("parent") && !node["parent"].is_null()) {
      const auto parent = node["parent"].get<std::string>();
      seg.parent = model.segment_index(parent);
      if (seg.parent < 0) {
        throw ValidationError("skeleton: segment '" + seg.name + "' names unknown or later parent '" + parent + "'");
      }
    }
    if (node.contains("offset")) seg.offset = vec3(node["offset"], seg.name + ".offset");
    const auto group_name = node.value("scale_group", std::string("none"));
    const auto group = scale_group_from_name(group_name);
    if (!group) throw ValidationError("skeleton: unknown scale group '" + group_name + "'");
    seg.scale_group = *group;
    seg.first_dof = model.num_dofs;
    if (node.contains("dofs")) {
      for (const auto& d : node["dofs"]) {
        JointAxis ax;
        ax.name = d.at("name").get<std::string>();
        ax.axis = vec3(d.at("axis"), ax.name + ".axis");
        if (ax.axis.norm() == 0.0) throw ValidationError("skeleton: dof '" + ax.name + "' has a zero axis");
        ax.axis.normalize();
        const auto lim = d.at("limits_deg");
        if (!lim.is_array() || lim.size() != 2) throw ValidationError("skeleton: dof '" + ax.name + "' needs 2 limits");
        ax.lower = lim[0].get<double>() * kDegToRad;
        ax.upper = lim[1].get<double>() * kDegToRad;
        seg.axes.push_back(ax);
      }
    }
    model.num_dofs += seg.axes.size();
    model.segments.push_back(std::move(seg));
  }

  if (doc.contains("markers")) {
    for (const auto& node : doc["markers"]) {
      Marker m;
      m.name = node.at("name").get<std::string>();
      const auto seg_name = node.at("segment").get<std::string>();
      m.segment = model.segment_index(seg_name);
      if (m.segment < 0) throw ValidationError("skeleton: marker '" + m.name + "' on unknown segment '" + seg_name + "'");
      m.offset = vec3(node.at("offset"), m.name + ".offset");
      model.markers.push_back(std::move(m));
    }
  }
  model.validate();
  return model;
}

SkeletonModel parse_skeleton_model(const std::string& text) {
  try {
    return parse_model_document(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("skeleton: ") + e.what());
  }
}

SkeletonModel load_skeleton_model(const std::filesystem::path& path) {
  try {
    return parse_skeleton_model(detail::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::filesystem::path default_skeleton_model_path() { return detail::data_directory() / "infant_skeleton.json"; }

}  // namespace mvmocap
