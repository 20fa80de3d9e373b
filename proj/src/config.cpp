#include "tdl/config.hpp"

#include <fstream>
#include <set>

#include "tdl/errors.hpp"

namespace tdl {
namespace {

using nlohmann::json;

// Flattens nested objects into dotted keys; dotted keys pass through.
void flatten(const json& node, const std::string& prefix, json& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) flatten(value, name, out);
    else out[name] = value;
  }
}

}  // namespace

double default_threshold(ScoreMethod method) noexcept {
  switch (method) {
    case ScoreMethod::Correlation: return 0.5;
    case ScoreMethod::Weighted: return 0.5;
    case ScoreMethod::Probability: return 0.35;
    case ScoreMethod::Combined: return kDefaultThreshold;
  }
  return kDefaultThreshold;
}

double ToolConfig::effective_threshold() const noexcept { return threshold.value_or(default_threshold(method)); }

ToolConfig ToolConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  json flat = json::object();
  flatten(doc, "", flat);
  static const std::set<std::string> known = {
      "version", "geometry.c", "geometry.speed_of_sound", "geometry.pivot", "scoring.method", "scoring.threshold",
      "scoring.weight_mode", "tdoa.method", "device.mic_spacing_m", "device.name", "seed"};
  for (const auto& [key, _] : flat.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  try {
    ToolConfig c;
    if (flat.value("version", 1) != 1) throw ConfigError("unsupported config version");
    if (flat.contains("geometry.c")) c.geometry.speed_of_sound = flat.at("geometry.c").get<double>();
    if (flat.contains("geometry.speed_of_sound")) c.geometry.speed_of_sound = flat.at("geometry.speed_of_sound").get<double>();
    if (!(c.geometry.speed_of_sound > 0.0)) throw ConfigError("geometry.c must be positive");
    if (flat.contains("geometry.pivot")) c.geometry.pivot = parse_pivot(flat.at("geometry.pivot").get<std::string>());
    if (flat.contains("scoring.method")) c.method = parse_score_method(flat.at("scoring.method").get<std::string>());
    if (flat.contains("scoring.threshold")) c.threshold = flat.at("scoring.threshold").get<double>();
    if (flat.contains("scoring.weight_mode"))
      c.weight_mode = parse_weight_mode(flat.at("scoring.weight_mode").get<std::string>());
    if (flat.contains("tdoa.method")) c.tdoa_method = parse_tdoa_method(flat.at("tdoa.method").get<std::string>());
    if (flat.contains("device.mic_spacing_m")) c.device.mic_spacing_m = flat.at("device.mic_spacing_m").get<double>();
    if (flat.contains("device.name")) c.device.name = flat.at("device.name").get<std::string>();
    if (flat.contains("seed")) c.seed = flat.at("seed").get<std::uint64_t>();
    try {
      c.device.validate();
    } catch (const PreconditionError& e) {
      throw ConfigError(e.what());
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ToolConfig ToolConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(doc);
}

json ToolConfig::to_json() const {
  return {{"geometry", {{"c", geometry.speed_of_sound}, {"pivot", std::string(to_string(geometry.pivot))}}},
          {"scoring",
           {{"method", std::string(to_string(method))},
            {"threshold", effective_threshold()},
            {"weight_mode", std::string(to_string(weight_mode))}}},
          {"tdoa", {{"method", std::string(to_string(tdoa_method))}}},
          {"device", {{"mic_spacing_m", device.mic_spacing_m}, {"name", device.name}}},
          {"seed", seed}};
}

}  // namespace tdl
