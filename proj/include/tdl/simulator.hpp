#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdl/geometry.hpp"
#include "tdl/phonemes.hpp"
#include "tdl/random.hpp"
#include "tdl/segmentation.hpp"
#include "tdl/signal_io.hpp"

namespace tdl {

// One phoneme's acoustic origin relative to the mouth reference point, plus
// the trial-to-trial instability of its TDoA (samples at 192 kHz, measured at
// the reference pose).
struct VocalSource {
  std::string label;
  ArticulationClass articulation = ArticulationClass::Vowel;
  double dy = 0.0;  // m
  double dz = 0.0;  // m
  double jitter_samples = 1.0;
  bool operator==(const VocalSource&) const = default;
};

inline constexpr double kVocalRegionRadius = 0.10;  // m
inline constexpr int kJitterReferenceRate = 192000;

class VocalSourceModel {
 public:
  VocalSourceModel() = default;
  explicit VocalSourceModel(std::vector<VocalSource> sources);

  // The shipped table (also in data/vocal_sources.json).
  static const VocalSourceModel& default_model();
  static VocalSourceModel from_json(const nlohmann::json& doc);
  static VocalSourceModel load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const VocalSource& at(const std::string& label) const;  // UnknownPhonemeError
  const std::vector<VocalSource>& sources() const noexcept { return sources_; }

  // Offsets inside the 0.10 m region, jitter > 0, labels from the inventory.
  void validate() const;

  // Distinct, stable simulated speaker: offsets scaled by 1 +- 10 % and
  // translated by up to 5 mm per axis, drawn from `user_seed`. Offsets that
  // leave the vocal region are pulled back onto its boundary.
  VocalSourceModel for_user(std::uint64_t user_seed) const;

  // Vertical jitter std (m) that reproduces jitter_samples at the reference pose.
  double vertical_jitter_m(const VocalSource& source) const;

  bool operator==(const VocalSourceModel& other) const { return sources_ == other.sources_; }

 private:
  std::vector<VocalSource> sources_;
};

// Second arrival of every phoneme: `extra_delay` samples after the direct
// sound at both microphones, scaled by `amplitude`, with its own TDoA.
struct EchoSpec {
  double extra_delay_samples = 50.0;
  double amplitude = 0.5;
  double tdoa_samples = 0.0;
};

struct LiveParams {
  std::vector<std::string> labels;
  DevicePose pose;
  int sample_rate = 192000;
  std::uint64_t seed = 1;
  double snr_db = 30.0;
  std::optional<EchoSpec> echo;
  bool jitter = true;
};

struct RenderedUtterance {
  StereoRecording recording;
  std::vector<PhonemeSegment> alignment;
  std::vector<double> ground_truth;  // samples, top later = positive
  std::vector<Point> source_positions;
};

// Phoneme excitation 100-300 ms (harmonic stack with breath noise when voiced,
// band-limited noise otherwise), fractional per-microphone delay by spectral
// phase shift, 1/d gain, 30 ms gaps, white noise at snr_db relative to the
// active speech power.
RenderedUtterance synthesize_live(const LiveParams& params, const VocalSourceModel& model);

enum class AttackKind { StaticPlayback, MobilePlayback, Replace };
std::string_view to_string(AttackKind k) noexcept;
AttackKind parse_attack_kind(std::string_view name);

// Circular source path in the Y-Z plane, parametrized over the utterance's
// duration: angle(t) = start_phase + sweep * t, t in [0, 1].
struct Trajectory {
  Point centre;
  double radius = 0.03;
  double start_phase = 0.0;
  double sweep = 3.14159;  // rad, sign gives the direction
};

struct AttackScenario {
  AttackKind kind = AttackKind::StaticPlayback;
  Point source;                          // StaticPlayback
  std::optional<Trajectory> trajectory;  // MobilePlayback
  double recorder_distance_m = 0.30;     // Replace

  // ScenarioError on a malformed trajectory or a recorder closer than 0.25 m.
  void validate() const;
  // Loudspeaker placement of the kind used throughout the experiments.
  static AttackScenario random(AttackKind kind, Rng& rng, const DevicePose& pose);
};

inline constexpr double kMinRecorderDistance = 0.25;  // m

// StaticPlayback/MobilePlayback render every phoneme from the loudspeaker
// position (fixed, or on the trajectory at the phoneme's centre time);
// Replace renders the live model with pose.x set to the recorder distance.
RenderedUtterance synthesize_attack(const LiveParams& base, const VocalSourceModel& model,
                                    const AttackScenario& scenario);

inline constexpr double kMinFaceDistance = 0.03;
inline constexpr double kMaxFaceDistance = 1.0;

// Ranging capture: beep body-conduction copy, face echo at 2d/c (0.3 relative
// amplitude), one weaker clutter echo beyond the face, white noise.
StereoRecording synthesize_beep_scene(double face_distance_m, int sample_rate, std::uint64_t seed,
                                      const BeepSpec& beep = {});

// Scene description consumed by `tdl simulate`.
struct Scene {
  std::string kind = "live";  // live | static_playback | mobile_playback | replace | beep
  std::vector<std::string> labels;
  DevicePose pose;
  int sample_rate = 192000;
  std::uint64_t seed = 1;
  std::uint64_t user_seed = 0;  // 0 = default table unperturbed
  double snr_db = 30.0;
  std::optional<EchoSpec> echo;
  std::optional<AttackScenario> scenario;
  double face_distance_m = 0.10;
};

Scene scene_from_json(const nlohmann::json& doc);
// Renders a live or attack scene; beep scenes go through synthesize_beep_scene.
RenderedUtterance render_scene(const Scene& scene, const VocalSourceModel& model = VocalSourceModel::default_model());
nlohmann::json ground_truth_to_json(const RenderedUtterance& utterance);

}  // namespace tdl
