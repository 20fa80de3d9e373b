#include "tdl/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tdl/errors.hpp"
#include "tdl/phonemes.hpp"

namespace tdl {
namespace {

void check_sequences(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates, std::size_t min_len) {
  const auto& m = dynamic.measurements;
  if (m.size() != templates.size())
    throw SequenceMismatchError("dynamic has " + std::to_string(m.size()) + " phonemes, template has " +
                                std::to_string(templates.size()));
  if (m.size() < min_len)
    throw SequenceMismatchError("need at least " + std::to_string(min_len) + " phonemes, got " +
                                std::to_string(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].label != templates[i].label && m[i].label != kUnlabeled)
      throw SequenceMismatchError("position " + std::to_string(i) + ": measured '" + m[i].label +
                                  "' vs template '" + templates[i].label + "'");
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double weighted_pearson(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += w[i] * dx * dy;
    sxx += w[i] * dx * dx;
    syy += w[i] * dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateSequenceError("constant delay sequence has no correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> means_of(std::span<const PhonemeTemplate> templates) {
  std::vector<double> out(templates.size());
  for (std::size_t i = 0; i < templates.size(); ++i) out[i] = templates[i].mean_delay;
  return out;
}

}  // namespace

std::string_view to_string(ScoreMethod m) noexcept {
  switch (m) {
    case ScoreMethod::Correlation: return "correlation";
    case ScoreMethod::Probability: return "probability";
    case ScoreMethod::Combined: return "combined";
    case ScoreMethod::Weighted: return "weighted";
  }
  return "combined";
}

ScoreMethod parse_score_method(std::string_view name) {
  if (name == "correlation") return ScoreMethod::Correlation;
  if (name == "probability") return ScoreMethod::Probability;
  if (name == "combined") return ScoreMethod::Combined;
  if (name == "weighted") return ScoreMethod::Weighted;
  throw ConfigError("unknown scoring method '" + std::string(name) + "'");
}

std::string_view to_string(WeightMode m) noexcept { return m == WeightMode::InverseStd ? "inverse_std" : "literal_std"; }

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "inverse_std") return WeightMode::InverseStd;
  if (name == "literal_std" || name == "literal") return WeightMode::LiteralStd;
  throw ConfigError("unknown scoring.weight_mode '" + std::string(name) + "'");
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Live ? "LIVE" : "REPLAY"; }

double correlation_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates) {
  check_sequences(dynamic, templates, 3);
  const auto x = dynamic.delays();
  const auto y = means_of(templates);
  const std::vector<double> w(x.size(), 1.0);
  return weighted_pearson(x, y, w);
}

double probability_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates) {
  check_sequences(dynamic, templates, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const double s = templates[i].effective_std();
    const double d = dynamic.measurements[i].delay_samples - templates[i].mean_delay;
    sum += std::exp(-(d * d) / (2.0 * s * s));
  }
  return sum / static_cast<double>(templates.size());
}

double weighted_correlation_score(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates,
                                  std::span<const double> group_std, WeightMode mode) {
  check_sequences(dynamic, templates, 3);
  if (!group_std.empty() && group_std.size() != templates.size())
    throw SequenceMismatchError("group std list does not match the template length");
  std::vector<double> w(templates.size());
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const double sigma = group_std.empty() ? templates[i].std_delay : group_std[i];
    if (!(sigma >= 0.0)) throw PreconditionError("negative group std");
    w[i] = mode == WeightMode::InverseStd ? 1.0 / (sigma + kWeightEpsilon) : sigma;
  }
  // Scale-free, but dividing by the largest weight makes uniform weights exactly 1.
  const double top = *std::max_element(w.begin(), w.end());
  if (!(top > 0.0)) throw DegenerateSequenceError("all correlation weights are zero");
  for (auto& v : w) v /= top;
  const auto x = dynamic.delays();
  const auto y = means_of(templates);
  return weighted_pearson(x, y, w);
}

double SimilarityScore::selected() const noexcept {
  switch (method_used) {
    case ScoreMethod::Correlation:
    case ScoreMethod::Weighted: return correlation;
    case ScoreMethod::Probability: return probability;
    case ScoreMethod::Combined: return combined;
  }
  return combined;
}

SimilarityScore score_dynamic(const TdoaDynamic& dynamic, std::span<const PhonemeTemplate> templates,
                              const ScoringOptions& options, std::span<const double> group_std) {
  SimilarityScore s;
  s.method_used = options.method;
  s.weighted = options.method == ScoreMethod::Weighted || options.weighted_correlation;
  s.probability = probability_score(dynamic, templates);
  try {
    s.correlation = s.weighted ? weighted_correlation_score(dynamic, templates, group_std, options.weight_mode)
                               : correlation_score(dynamic, templates);
  } catch (const DegenerateSequenceError&) {
    s.correlation = 0.0;
    s.correlation_degenerate = true;
  }
  const double rescaled = s.correlation_degenerate ? 0.5 : 0.5 * (s.correlation + 1.0);
  s.combined = 0.5 * (rescaled + s.probability);
  return s;
}

Decision decide(const SimilarityScore& score, double threshold, ScoreMethod method) {
  const bool signed_score = method == ScoreMethod::Correlation || method == ScoreMethod::Weighted;
  const double lo = signed_score ? -1.0 : 0.0;
  if (!(threshold >= lo && threshold <= 1.0))
    throw PreconditionError("threshold " + std::to_string(threshold) + " outside [" + std::to_string(lo) + ", 1]");
  Decision d;
  d.score = score;
  d.score.method_used = method;
  d.threshold = threshold;
  d.verdict = d.score.selected() > threshold ? Verdict::Live : Verdict::Replay;
  return d;
}

nlohmann::json decision_to_json(const Decision& decision) {
  const auto& s = decision.score;
  return {{"version", kDecisionVersion},
          {"verdict", std::string(to_string(decision.verdict))},
          {"method", std::string(to_string(s.method_used))},
          {"scores", {{"correlation", s.correlation}, {"probability", s.probability}, {"combined", s.combined}}},
          {"correlation_degenerate", s.correlation_degenerate},
          {"threshold", decision.threshold}};
}

}  // namespace tdl
