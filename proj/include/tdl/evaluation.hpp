#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdl/geometry.hpp"
#include "tdl/profiles.hpp"
#include "tdl/scoring.hpp"
#include "tdl/simulator.hpp"

namespace tdl {

struct LabeledScoreSet {
  std::vector<double> live_scores;    // genuine attempts, should be accepted
  std::vector<double> attack_scores;  // replay attempts, should be rejected
};

struct RocPoint {
  double threshold = 0.0;  // accept iff score > threshold
  double tar = 0.0;
  double far = 0.0;
};

// Points for -inf, every distinct score in ascending order, and +inf.
// EmptySetError if either list is empty.
std::vector<RocPoint> roc(const LabeledScoreSet& scores);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Linear interpolation between the neighbouring sweep points where FAR - FRR changes sign.
EerResult eer_point(const LabeledScoreSet& scores);
double eer(const LabeledScoreSet& scores);

// (live > t) + (attack <= t), over the total count.
double accuracy(const LabeledScoreSet& scores, double threshold);

struct PoseSetting {
  double angle_deg = 0.0;
  double delta_x_m = 0.0;
  std::string key() const;
  bool operator==(const PoseSetting&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int users = 12;
  int passphrases_per_user = 10;
  int enrollment_trials = 3;
  int live_trials = 10;
  int static_attacks = 5;   // per passphrase and pose
  int mobile_attacks = 5;
  int replace_attacks = 0;
  double replace_min_m = 0.25;
  double replace_max_m = 0.45;
  int min_words = 2;
  int max_words = 10;
  int min_phonemes_per_word = 2;
  int max_phonemes_per_word = 4;
  int sample_rate = 192000;
  double snr_db = 30.0;
  ProfileMode mode = ProfileMode::TextDependent;
  ScoreMethod method = ScoreMethod::Combined;
  WeightMode weight_mode = WeightMode::InverseStd;
  double threshold = kDefaultThreshold;
  TdoaMethod tdoa_method = TdoaMethod::GccPhat;
  GeometryOptions geometry;
  std::vector<PoseSetting> poses{PoseSetting{}};
  bool pose_transform = true;

  // ConfigError on an invalid combination.
  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct TrialRecord {
  int user = 0;
  int passphrase = 0;
  int words = 0;
  std::size_t pose_index = 0;
  bool live = true;
  std::optional<AttackKind> attack;
  double replace_distance_m = 0.0;
  double correlation = 0.0;
  double weighted = 0.0;
  double probability = 0.0;
  double combined = 0.0;

  double score(ScoreMethod m) const noexcept;
};

// Passphrase length bands by word count.
std::string length_band(int words);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;  // deterministic order

  // Live trials against attack trials; filters are optional.
  LabeledScoreSet scores(ScoreMethod method, std::optional<AttackKind> attack = std::nullopt,
                         std::optional<std::string> band = std::nullopt,
                         std::optional<std::size_t> pose_index = std::nullopt) const;
  nlohmann::json report() const;
  std::string csv() const;
  // gnuplot-friendly ROC blocks, one per method.
  std::string roc_columns() const;
};

// Builds the simulated corpus, enrolls every user, scores every trial.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace tdl
