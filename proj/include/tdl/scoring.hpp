#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdl/profiles.hpp"
#include "tdl/tdoa.hpp"

namespace tdl {

enum class ScoreMethod { Correlation, Probability, Combined, Weighted };
std::string_view to_string(ScoreMethod m) noexcept;
ScoreMethod parse_score_method(std::string_view name);

// InverseStd: w = 1 / (sigma + 0.1), stable phonemes dominate.
// LiteralStd: w = sigma, kept for comparison.
enum class WeightMode { InverseStd, LiteralStd };
std::string_view to_string(WeightMode m) noexcept;
WeightMode parse_weight_mode(std::string_view name);

inline constexpr double kWeightEpsilon = 0.1;  // samples
inline constexpr double kDefaultThreshold = 0.55;

// Pearson correlation of measured delays against template means. Needs
// >= 3 positions with matching labels (SequenceMismatchError) and
// non-constant sequences (DegenerateSequenceError).
double correlation_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates);

// Mean over positions of exp(-(d - mu)^2 / (2 sigma^2)), sigma floored at 0.5.
double probability_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates);

// Weighted Pearson correlation with plain arithmetic means:
//   sum w (x - xbar)(y - ybar) / sqrt(sum w (x - xbar)^2 * sum w (y - ybar)^2)
// sigma_i comes from `group_std` (same length as templates) or, when empty,
// from each template's own std.
double weighted_correlation_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates,
                                  std::span<const double> group_std = {},
                                  WeightMode mode = WeightMode::InverseStd);

struct SimilarityScore {
  double correlation = 0.0;   // [-1, 1]; 0 when the sequence is degenerate
  double probability = 0.0;   // (0, 1]
  double combined = 0.0;      // [0, 1]
  bool correlation_degenerate = false;
  bool weighted = false;      // correlation field holds the weighted variant
  ScoreMethod method_used = ScoreMethod::Combined;

  double selected() const noexcept;
};

struct ScoringOptions {
  ScoreMethod method = ScoreMethod::Combined;
  WeightMode weight_mode = WeightMode::InverseStd;
  // Use the weighted correlation inside the combined score (text-independent mode).
  bool weighted_correlation = false;
};

// Computes all components. A degenerate correlation enters `combined` as 0.5.
SimilarityScore score_dynamic(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates,
                              const ScoringOptions& options = {}, std::span<const double> group_std = {});

enum class Verdict { Live, Replay };
std::string_view to_string(Verdict v) noexcept;

struct Decision {
  Verdict verdict = Verdict::Replay;
  SimilarityScore score;
  double threshold = kDefaultThreshold;
};

// LIVE iff the selected score is strictly greater than threshold.
Decision decide(const SimilarityScore& score, double threshold, ScoreMethod method);
inline constexpr int kDecisionVersion = 1;
nlohmann::json decision_to_json(const Decision& decision);

}  // namespace tdl
