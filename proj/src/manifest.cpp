#include "mvmocap/manifest.hpp"

#include <algorithm>
#include <json.hpp>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

using json = nlohmann::json;

std::vector<std::string> string_list(const json& node, const std::string& what) {
  if (!node.is_array()) throw ValidationError(what + " must be a list of names");
  std::vector<std::string> out;
  for (const auto& n : node) {
    if (!n.is_string()) throw ValidationError(what + " must contain strings");
    out.push_back(n.get<std::string>());
  }
  return out;
}

std::string required_string(const json& doc, const char* key, const std::string& origin) {
  if (!doc.contains(key) || !doc[key].is_string() || doc[key].get<std::string>().empty()) {
    throw ValidationError(origin + ": '" + key + "' must be a non-empty string");
  }
  return doc[key].get<std::string>();
}

TrialManifest parse_document(const json& doc, const std::filesystem::path& base_dir, const std::string& origin) {
  if (!doc.is_object()) throw ValidationError(origin + ": expected a JSON object");
  TrialManifest m;
  m.base_dir = base_dir;
  m.session_id = required_string(doc, "session_id", origin);
  m.trial_id = required_string(doc, "trial_id", origin);
  m.calibration = required_string(doc, "calibration", origin);
  if (doc.contains("front_camera") && !doc["front_camera"].is_null()) {
    m.front_camera = required_string(doc, "front_camera", origin);
  }
  if (doc.contains("keypoint_mask")) {
    const auto& km = doc["keypoint_mask"];
    if (!km.is_object()) throw ValidationError(origin + ": 'keypoint_mask' must be an object");
    m.keypoint_mask.name = km.value("name", std::string("custom"));
    if (km.contains("include")) m.keypoint_mask.include = string_list(km["include"], origin + ": keypoint_mask.include");
    if (km.contains("exclude")) m.keypoint_mask.exclude = string_list(km["exclude"], origin + ": keypoint_mask.exclude");
    if (m.keypoint_mask.name == "non_facial" && m.keypoint_mask.include.empty() && m.keypoint_mask.exclude.empty()) {
      m.keypoint_mask.exclude = default_facial_keypoints();
    }
  }
  if (!doc.contains("methods") || !doc["methods"].is_object() || doc["methods"].empty()) {
    throw ValidationError(origin + ": 'methods' must be a non-empty object");
  }
  for (const auto& [name, node] : doc["methods"].items()) {
    MethodEntry e;
    e.name = name;
    if (!node.is_object() || !node.contains("detections") || !node["detections"].is_object() ||
        node["detections"].empty()) {
      throw ValidationError(origin + ": method '" + name + "' needs a non-empty 'detections' object");
    }
    for (const auto& [cam, path] : node["detections"].items()) {
      if (!path.is_string()) throw ValidationError(origin + ": detections path for '" + name + "/" + cam + "' must be a string");
      e.detections[cam] = path.get<std::string>();
    }
    if (node.contains("monocular_3d") && !node["monocular_3d"].is_null()) {
      if (!node["monocular_3d"].is_string()) throw ValidationError(origin + ": monocular_3d of '" + name + "' must be a path");
      e.monocular_3d = node["monocular_3d"].get<std::string>();
    }
    m.methods.push_back(std::move(e));
  }
  std::sort(m.methods.begin(), m.methods.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return m;
}

}  // namespace

const std::vector<std::string>& default_facial_keypoints() {
  static const std::vector<std::string> names{"nose", "left_eye", "right_eye", "left_ear", "right_ear"};
  return names;
}

std::filesystem::path TrialManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

const MethodEntry& TrialManifest::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return m;
  throw ValidationError("manifest " + session_id + "/" + trial_id + " has no method '" + name + "'");
}

bool TrialManifest::wants_position_error() const {
  return std::any_of(methods.begin(), methods.end(), [](const MethodEntry& e) { return e.monocular_3d.has_value(); });
}

void TrialManifest::validate(const CameraRig& rig) const {
  const std::string where = "manifest " + session_id + "/" + trial_id;
  auto require_file = [&](const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::is_regular_file(resolve(p))) {
      throw ValidationError(where + ": " + what + " file not found: " + resolve(p).string());
    }
  };
  require_file(calibration, "calibration");
  for (const auto& m : methods) {
    for (const auto& [cam, path] : m.detections) {
      if (!rig.find(cam)) {
        throw ValidationError(where + ": method '" + m.name + "' lists camera '" + cam + "' missing from the calibration");
      }
      require_file(path, "detections for method '" + m.name + "', camera '" + cam + "'");
    }
    if (m.monocular_3d) require_file(*m.monocular_3d, "monocular 3D estimate for method '" + m.name + "'");
  }
  if (wants_position_error()) {
    if (!front_camera) throw ValidationError(where + ": a front camera is required for position error");
    if (!rig.find(*front_camera)) {
      throw ValidationError(where + ": front camera '" + *front_camera + "' is not in the calibration");
    }
  }
}

TrialManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, const std::string& origin) {
  try {
    return parse_document(json::parse(text), base_dir, origin);
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

TrialManifest load_manifest(const std::filesystem::path& path) {
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_manifest(detail::read_file(path), base, path.string());
}

std::string format_manifest(const TrialManifest& manifest) {
  json doc = json::object();
  doc["session_id"] = manifest.session_id;
  doc["trial_id"] = manifest.trial_id;
  doc["calibration"] = manifest.calibration.generic_string();
  if (manifest.front_camera) doc["front_camera"] = *manifest.front_camera;
  json mask = json::object();
  mask["name"] = manifest.keypoint_mask.name;
  if (!manifest.keypoint_mask.include.empty()) mask["include"] = manifest.keypoint_mask.include;
  if (!manifest.keypoint_mask.exclude.empty()) mask["exclude"] = manifest.keypoint_mask.exclude;
  doc["keypoint_mask"] = mask;
  json methods = json::object();
  for (const auto& m : manifest.methods) {
    json entry = json::object();
    json det = json::object();
    for (const auto& [cam, path] : m.detections) det[cam] = path.generic_string();
    entry["detections"] = det;
    if (m.monocular_3d) entry["monocular_3d"] = m.monocular_3d->generic_string();
    methods[m.name] = entry;
  }
  doc["methods"] = methods;
  return doc.dump(2) + "\n";
}

void save_manifest(const TrialManifest& manifest, const std::filesystem::path& path) {
  detail::write_file(path, format_manifest(manifest));
}

}  // namespace mvmocap
