#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "tdl/geometry.hpp"
#include "tdl/scoring.hpp"
#include "tdl/tdoa.hpp"

namespace tdl {

// Settings shared by the CLI subcommands. A config file may use nested
// objects ({"scoring": {"method": "combined"}}) or dotted keys
// ({"scoring.method": "combined"}):
//   geometry.c | geometry.speed_of_sound, geometry.pivot,
//   scoring.method, scoring.threshold, scoring.weight_mode,
//   tdoa.method, device.mic_spacing_m, device.name, seed
struct ToolConfig {
  ScoreMethod method = ScoreMethod::Combined;
  std::optional<double> threshold;
  WeightMode weight_mode = WeightMode::InverseStd;
  GeometryOptions geometry;
  TdoaMethod tdoa_method = TdoaMethod::GccPhat;
  DeviceSpec device;
  std::uint64_t seed = 1;

  // Explicit threshold, or the method's default.
  double effective_threshold() const noexcept;

  // Unknown keys and invalid values raise ConfigError.
  static ToolConfig from_json(const nlohmann::json& doc);
  static ToolConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Default operating points from the simulated corpora.
double default_threshold(ScoreMethod method) noexcept;

}  // namespace tdl
