#include "tdl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "tdl/errors.hpp"

namespace tdl {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr ScoreMethod kAllMethods[] = {ScoreMethod::Correlation, ScoreMethod::Probability, ScoreMethod::Combined,
                                       ScoreMethod::Weighted};

void require_non_empty(const LabeledScoreSet& s) {
  if (s.live_scores.empty() || s.attack_scores.empty())
    throw EmptySetError("score set needs at least one live and one attack score");
}

// Fraction of `values` strictly above t; values sorted ascending.
double fraction_above(const std::vector<double>& values, double t) {
  const auto it = std::upper_bound(values.begin(), values.end(), t);
  return static_cast<double>(values.end() - it) / static_cast<double>(values.size());
}

json threshold_json(double t) {
  if (t == kInf) return "inf";
  if (t == -kInf) return "-inf";
  return t;
}

}  // namespace

std::vector<RocPoint> roc(const LabeledScoreSet& scores) {
  require_non_empty(scores);
  auto live = scores.live_scores;
  auto attack = scores.attack_scores;
  std::sort(live.begin(), live.end());
  std::sort(attack.begin(), attack.end());
  std::vector<double> thresholds;
  thresholds.reserve(live.size() + attack.size() + 2);
  thresholds.push_back(-kInf);
  std::merge(live.begin(), live.end(), attack.begin(), attack.end(), std::back_inserter(thresholds));
  thresholds.push_back(kInf);
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) points.push_back({t, fraction_above(live, t), fraction_above(attack, t)});
  return points;
}

EerResult eer_point(const LabeledScoreSet& scores) {
  const auto points = roc(scores);
  // diff = FAR - FRR runs from +1 at -inf to -1 at +inf.
  auto diff = [](const RocPoint& p) { return p.far - (1.0 - p.tar); };
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = diff(points[i]);
    const double b = diff(points[i + 1]);
    if (a == 0.0) return {points[i].far, points[i].threshold};
    if (a > 0.0 && b <= 0.0) {
      if (b == 0.0) return {points[i + 1].far, points[i + 1].threshold};
      const double f = a / (a - b);
      const double rate = points[i].far + f * (points[i + 1].far - points[i].far);
      const double t0 = points[i].threshold, t1 = points[i + 1].threshold;
      double t = std::isfinite(t0) && std::isfinite(t1) ? t0 + f * (t1 - t0) : (std::isfinite(t0) ? t0 : t1);
      return {rate, t};
    }
  }
  return {0.0, points.back().threshold};
}

double eer(const LabeledScoreSet& scores) { return eer_point(scores).eer; }

double accuracy(const LabeledScoreSet& scores, double threshold) {
  require_non_empty(scores);
  std::size_t correct = 0;
  for (double s : scores.live_scores) correct += s > threshold ? 1 : 0;
  for (double s : scores.attack_scores) correct += s > threshold ? 0 : 1;
  return static_cast<double>(correct) /
         static_cast<double>(scores.live_scores.size() + scores.attack_scores.size());
}

std::string PoseSetting::key() const {
  std::ostringstream out;
  out << angle_deg << "deg_" << delta_x_m * 100.0 << "cm";
  return out.str();
}

std::string length_band(int words) {
  if (words <= 4) return "2-4";
  if (words <= 7) return "5-7";
  return "8-10";
}

double TrialRecord::score(ScoreMethod m) const noexcept {
  switch (m) {
    case ScoreMethod::Correlation: return correlation;
    case ScoreMethod::Probability: return probability;
    case ScoreMethod::Combined: return combined;
    case ScoreMethod::Weighted: return weighted;
  }
  return combined;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("experiment: " + what); };
  if (users < 1) fail("users must be >= 1");
  if (passphrases_per_user < 1) fail("passphrases_per_user must be >= 1");
  if (enrollment_trials < kMinEnrollmentTrials) fail("enrollment_trials must be >= 3");
  if (live_trials < 1) fail("live_trials must be >= 1");
  if (static_attacks < 0 || mobile_attacks < 0 || replace_attacks < 0) fail("attack counts must be >= 0");
  if (static_attacks + mobile_attacks + replace_attacks < 1) fail("at least one attack per passphrase is needed");
  if (!(replace_min_m >= kMinRecorderDistance) || !(replace_max_m >= replace_min_m))
    fail("replace distances must satisfy 0.25 <= min <= max");
  if (min_words < 1 || max_words < min_words) fail("word range is empty");
  if (min_phonemes_per_word < 1 || max_phonemes_per_word < min_phonemes_per_word) fail("phoneme-per-word range is empty");
  if (sample_rate < kMinSampleRate) fail("sample_rate below 44100");
  if (poses.empty()) fail("pose list is empty");
  for (const auto& p : poses) {
    if (!(std::abs(p.angle_deg) < 90.0)) fail("pose angle must lie in (-90, 90) degrees");
    if (!(DevicePose::reference().x + p.delta_x_m > 0.0)) fail("pose distance change moves the phone through the face");
  }
  const bool signed_score = method == ScoreMethod::Correlation || method == ScoreMethod::Weighted;
  if (!(threshold <= 1.0 && threshold >= (signed_score ? -1.0 : 0.0))) fail("threshold outside the method's range");
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  try {
    if (doc.value("version", 1) != 1) throw ConfigError("unsupported experiment version");
    ExperimentConfig c;
    c.seed = doc.value("seed", c.seed);
    c.users = doc.value("users", c.users);
    c.passphrases_per_user = doc.value("passphrases_per_user", c.passphrases_per_user);
    c.enrollment_trials = doc.value("enrollment_trials", c.enrollment_trials);
    c.live_trials = doc.value("live_trials", c.live_trials);
    if (doc.contains("attacks")) {
      const auto& a = doc.at("attacks");
      c.static_attacks = a.value("static_playback", 0);
      c.mobile_attacks = a.value("mobile_playback", 0);
      c.replace_attacks = a.value("replace", 0);
    }
    if (doc.contains("replace_distance_m")) {
      const auto r = doc.at("replace_distance_m").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("replace_distance_m must be [min, max]");
      c.replace_min_m = r[0];
      c.replace_max_m = r[1];
    }
    if (doc.contains("words")) {
      const auto w = doc.at("words").get<std::vector<int>>();
      if (w.size() != 2) throw ConfigError("words must be [min, max]");
      c.min_words = w[0];
      c.max_words = w[1];
    }
    if (doc.contains("phonemes_per_word")) {
      const auto w = doc.at("phonemes_per_word").get<std::vector<int>>();
      if (w.size() != 2) throw ConfigError("phonemes_per_word must be [min, max]");
      c.min_phonemes_per_word = w[0];
      c.max_phonemes_per_word = w[1];
    }
    c.sample_rate = doc.value("sample_rate", c.sample_rate);
    c.snr_db = doc.value("snr_db", c.snr_db);
    if (doc.contains("mode")) {
      try {
        c.mode = parse_profile_mode(doc.at("mode").get<std::string>());
      } catch (const SchemaError& e) {
        throw ConfigError(e.what());
      }
    }
    if (doc.contains("method")) c.method = parse_score_method(doc.at("method").get<std::string>());
    if (doc.contains("weight_mode")) c.weight_mode = parse_weight_mode(doc.at("weight_mode").get<std::string>());
    c.threshold = doc.value("threshold", c.threshold);
    if (doc.contains("tdoa_method")) c.tdoa_method = parse_tdoa_method(doc.at("tdoa_method").get<std::string>());
    if (doc.contains("pivot")) c.geometry.pivot = parse_pivot(doc.at("pivot").get<std::string>());
    c.geometry.speed_of_sound = doc.value("speed_of_sound", c.geometry.speed_of_sound);
    if (doc.contains("poses")) {
      c.poses.clear();
      for (const auto& p : doc.at("poses"))
        c.poses.push_back({p.value("angle_deg", 0.0), p.value("delta_x_m", 0.0)});
    }
    c.pose_transform = doc.value("pose_transform", c.pose_transform);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json poses_json = json::array();
  for (const auto& p : poses) poses_json.push_back({{"angle_deg", p.angle_deg}, {"delta_x_m", p.delta_x_m}});
  return {{"version", 1},
          {"seed", seed},
          {"users", users},
          {"passphrases_per_user", passphrases_per_user},
          {"enrollment_trials", enrollment_trials},
          {"live_trials", live_trials},
          {"attacks", {{"static_playback", static_attacks}, {"mobile_playback", mobile_attacks}, {"replace", replace_attacks}}},
          {"replace_distance_m", {replace_min_m, replace_max_m}},
          {"words", {min_words, max_words}},
          {"phonemes_per_word", {min_phonemes_per_word, max_phonemes_per_word}},
          {"sample_rate", sample_rate},
          {"snr_db", snr_db},
          {"mode", std::string(to_string(mode))},
          {"method", std::string(to_string(method))},
          {"weight_mode", std::string(to_string(weight_mode))},
          {"threshold", threshold},
          {"tdoa_method", std::string(to_string(tdoa_method))},
          {"pivot", std::string(to_string(geometry.pivot))},
          {"speed_of_sound", geometry.speed_of_sound},
          {"poses", poses_json},
          {"pose_transform", pose_transform}};
}

LabeledScoreSet ExperimentResult::scores(ScoreMethod method, std::optional<AttackKind> attack,
                                         std::optional<std::string> band,
                                         std::optional<std::size_t> pose_index) const {
  LabeledScoreSet set;
  for (const auto& t : trials) {
    if (band && length_band(t.words) != *band) continue;
    if (pose_index && t.pose_index != *pose_index) continue;
    if (t.live) {
      set.live_scores.push_back(t.score(method));
    } else if (!attack || t.attack == attack) {
      set.attack_scores.push_back(t.score(method));
    }
  }
  return set;
}

json ExperimentResult::report() const {
  json doc;
  doc["version"] = 1;
  doc["config"] = config.to_json();
  std::size_t live = 0;
  std::map<std::string, std::size_t> attacks;
  for (const auto& t : trials) {
    if (t.live) ++live;
    else ++attacks[std::string(to_string(*t.attack))];
  }
  doc["counts"] = {{"live", live}, {"attack", attacks}};

  std::map<ScoreMethod, double> eer_thresholds;
  json overall = json::object();
  json roc_json = json::object();
  for (auto m : kAllMethods) {
    const auto set = scores(m);
    const auto e = eer_point(set);
    eer_thresholds[m] = e.threshold;
    json entry = {{"eer", e.eer}, {"eer_threshold", e.threshold}, {"accuracy_at_eer_threshold", accuracy(set, e.threshold)}};
    if (m == config.method) entry["accuracy"] = accuracy(set, config.threshold);
    overall[std::string(to_string(m))] = entry;
    json curve = json::array();
    for (const auto& p : roc(set)) curve.push_back({threshold_json(p.threshold), p.tar, p.far});
    roc_json[std::string(to_string(m))] = std::move(curve);
  }
  doc["selected"] = {{"method", std::string(to_string(config.method))}, {"threshold", config.threshold}};
  doc["overall"] = std::move(overall);

  auto metrics_for = [&](auto make) {
    json g = json::object();
    for (auto m : kAllMethods) {
      const LabeledScoreSet set = make(m);
      if (set.live_scores.empty() || set.attack_scores.empty()) return json();
      const double t = m == config.method ? config.threshold : eer_thresholds[m];
      g[std::string(to_string(m))] = {{"eer", eer(set)}, {"accuracy", accuracy(set, t)},
                                      {"live", set.live_scores.size()}, {"attack", set.attack_scores.size()}};
    }
    return g;
  };
  json groups;
  groups["attack_kind"] = json::object();
  for (auto k : {AttackKind::StaticPlayback, AttackKind::MobilePlayback, AttackKind::Replace}) {
    auto g = metrics_for([&](ScoreMethod m) { return scores(m, k); });
    if (!g.is_null()) groups["attack_kind"][std::string(to_string(k))] = g;
  }
  groups["length_band"] = json::object();
  for (const char* band : {"2-4", "5-7", "8-10"}) {
    auto g = metrics_for([&](ScoreMethod m) { return scores(m, std::nullopt, std::string(band)); });
    if (!g.is_null()) groups["length_band"][band] = g;
  }
  groups["pose"] = json::object();
  for (std::size_t i = 0; i < config.poses.size(); ++i) {
    auto g = metrics_for([&](ScoreMethod m) { return scores(m, std::nullopt, std::nullopt, i); });
    if (!g.is_null()) groups["pose"][config.poses[i].key()] = g;
  }
  doc["groups"] = std::move(groups);
  doc["roc"] = std::move(roc_json);
  return doc;
}

std::string ExperimentResult::csv() const {
  const json r = report();
  std::ostringstream out;
  out << "group,key,method,live,attack,eer,accuracy\n";
  for (const auto& [group, entries] : r.at("groups").items())
    for (const auto& [key, methods] : entries.items())
      for (const auto& [method, v] : methods.items())
        out << group << ',' << key << ',' << method << ',' << v.at("live").get<std::size_t>() << ','
            << v.at("attack").get<std::size_t>() << ',' << v.at("eer").get<double>() << ','
            << v.at("accuracy").get<double>() << '\n';
  return out.str();
}

std::string ExperimentResult::roc_columns() const {
  std::ostringstream out;
  for (auto m : kAllMethods) {
    out << "# method " << to_string(m) << "\n# threshold tar far\n";
    for (const auto& p : roc(scores(m))) {
      if (!std::isfinite(p.threshold)) continue;
      out << p.threshold << ' ' << p.tar << ' ' << p.far << '\n';
    }
    out << "\n\n";
  }
  return out.str();
}

namespace {

struct Passphrase {
  std::vector<std::string> labels;
  int words = 0;
};

Passphrase draw_passphrase(const ExperimentConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  const auto symbols = PhonemeInventory::english().symbols();
  Passphrase p;
  p.words = static_cast<int>(rng.integer(c.min_words, c.max_words));
  for (int w = 0; w < p.words; ++w) {
    const auto n = rng.integer(c.min_phonemes_per_word, c.max_phonemes_per_word);
    for (std::int64_t k = 0; k < n; ++k)
      p.labels.emplace_back(symbols[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(symbols.size()) - 1))].symbol);
  }
  return p;
}

struct Enrolled {
  Passphrase phrase;
  std::vector<PhonemeTemplate> templates;  // text-dependent only
};

struct UserState {
  std::uint64_t seed = 0;
  VocalSourceModel model;
  UserProfile ti_profile;  // text-independent only
  std::vector<Enrolled> phrases;
};

struct Job {
  int user = 0;
  int passphrase = 0;
  std::size_t pose_index = 0;
  bool live = true;
  AttackKind attack = AttackKind::StaticPlayback;
  int index = 0;
};

DevicePose verify_pose(const PoseSetting& p) {
  DevicePose pose = DevicePose::reference();
  pose.x += p.delta_x_m;
  pose.alpha = p.angle_deg * std::numbers::pi / 180.0;
  return pose;
}

DeviceSpec device_for(const DevicePose& pose) { return DeviceSpec{pose.l, "simulated"}; }

template <class F>
void parallel_for(std::size_t count, F&& body) {
  std::vector<std::exception_ptr> failures(count);
  const auto n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const DevicePose enroll_pose = DevicePose::reference();
  const DeviceSpec enroll_device = device_for(enroll_pose);
  const auto& inventory = PhonemeInventory::english();

  std::vector<UserState> users(static_cast<std::size_t>(config.users));
  for (int u = 0; u < config.users; ++u) {
    auto& st = users[static_cast<std::size_t>(u)];
    st.seed = derive_seed(config.seed, 100 + static_cast<std::uint64_t>(u));
    st.model = VocalSourceModel::default_model().for_user(st.seed);
    st.phrases.resize(static_cast<std::size_t>(config.passphrases_per_user));
    for (int p = 0; p < config.passphrases_per_user; ++p)
      st.phrases[static_cast<std::size_t>(p)].phrase =
          draw_passphrase(config, derive_seed(st.seed, 200 + static_cast<std::uint64_t>(p)));
  }

  auto live_params = [&](const std::vector<std::string>& labels, const DevicePose& pose, std::uint64_t seed) {
    LiveParams lp;
    lp.labels = labels;
    lp.pose = pose;
    lp.sample_rate = config.sample_rate;
    lp.seed = seed;
    lp.snr_db = config.snr_db;
    return lp;
  };
  auto measure = [&](const RenderedUtterance& u, const DevicePose& pose) {
    return measure_dynamic(u.recording, u.alignment, config.tdoa_method, device_for(pose),
                           config.geometry.speed_of_sound);
  };

  // Enrollment.
  if (config.mode == ProfileMode::TextDependent) {
    const std::size_t per_user = static_cast<std::size_t>(config.passphrases_per_user);
    parallel_for(users.size() * per_user, [&](std::size_t k) {
      auto& st = users[k / per_user];
      auto& e = st.phrases[k % per_user];
      std::vector<TdoaDynamic> dyn;
      for (int t = 0; t < config.enrollment_trials; ++t) {
        const auto seed = derive_seed(st.seed, 10000 + 100 * (k % per_user) + static_cast<std::uint64_t>(t));
        dyn.push_back(measure(synthesize_live(live_params(e.phrase.labels, enroll_pose, seed), st.model), enroll_pose));
      }
      e.templates = templates_from_dynamics(dyn);
    });
  } else {
    std::vector<std::string> all;
    for (const auto& info : inventory.symbols()) all.emplace_back(info.symbol);
    const auto trials = static_cast<std::size_t>(config.enrollment_trials);
    std::vector<TdoaDynamic> dyn(users.size() * trials);
    parallel_for(dyn.size(), [&](std::size_t k) {
      const auto& st = users[k / trials];
      Rng order(derive_seed(st.seed, 300 + k % trials));
      auto labels = all;
      for (std::size_t i = labels.size() - 1; i > 0; --i)
        std::swap(labels[i], labels[static_cast<std::size_t>(order.integer(0, static_cast<std::int64_t>(i)))]);
      const auto seed = derive_seed(st.seed, 20000 + k % trials);
      dyn[k] = measure(synthesize_live(live_params(labels, enroll_pose, seed), st.model), enroll_pose);
    });
    for (std::size_t u = 0; u < users.size(); ++u) {
      std::map<std::string, std::vector<double>> delays;
      for (std::size_t t = 0; t < trials; ++t)
        for (const auto& m : dyn[u * trials + t].measurements) delays[m.label].push_back(m.delay_samples);
      users[u].ti_profile = profile_from_phoneme_delays("user" + std::to_string(u), delays, enroll_pose,
                                                        enroll_device, config.sample_rate);
    }
  }

  // Verification jobs in a fixed order.
  std::vector<Job> jobs;
  for (int u = 0; u < config.users; ++u)
    for (int p = 0; p < config.passphrases_per_user; ++p)
      for (std::size_t pi = 0; pi < config.poses.size(); ++pi) {
        for (int i = 0; i < config.live_trials; ++i) jobs.push_back({u, p, pi, true, AttackKind::StaticPlayback, i});
        for (int i = 0; i < config.static_attacks; ++i) jobs.push_back({u, p, pi, false, AttackKind::StaticPlayback, i});
        for (int i = 0; i < config.mobile_attacks; ++i) jobs.push_back({u, p, pi, false, AttackKind::MobilePlayback, i});
        for (int i = 0; i < config.replace_attacks; ++i) jobs.push_back({u, p, pi, false, AttackKind::Replace, i});
      }

  ExperimentResult result;
  result.config = config;
  result.trials.resize(jobs.size());
  ScoringOptions options;
  options.method = config.method;
  options.weight_mode = config.weight_mode;
  options.weighted_correlation = config.mode == ProfileMode::TextIndependent;

  parallel_for(jobs.size(), [&](std::size_t k) {
    const Job& job = jobs[k];
    const auto& st = users[static_cast<std::size_t>(job.user)];
    const auto& enrolled = st.phrases[static_cast<std::size_t>(job.passphrase)];
    const PoseSetting& setting = config.poses[job.pose_index];
    const DevicePose pose = verify_pose(setting);

    std::vector<PhonemeTemplate> templates = config.mode == ProfileMode::TextDependent
                                                 ? enrolled.templates
                                                 : assemble_template(st.ti_profile, enrolled.phrase.labels);
    const PoseChange change{setting.delta_x_m, pose.alpha};
    if (config.pose_transform && !change.is_identity())
      templates = adapt_templates(templates, enroll_pose, change, config.sample_rate, config.geometry);

    const std::uint64_t stream = 1'000'000ULL * static_cast<std::uint64_t>(job.passphrase) +
                                 10'000ULL * job.pose_index +
                                 1'000ULL * (job.live ? 0 : 1 + static_cast<std::uint64_t>(job.attack)) +
                                 static_cast<std::uint64_t>(job.index);
    const auto seed = derive_seed(st.seed, 50'000'000ULL + stream);
    const auto params = live_params(enrolled.phrase.labels, pose, seed);
    TrialRecord rec;
    rec.user = job.user;
    rec.passphrase = job.passphrase;
    rec.words = enrolled.phrase.words;
    rec.pose_index = job.pose_index;
    rec.live = job.live;
    RenderedUtterance utt;
    if (job.live) {
      utt = synthesize_live(params, st.model);
    } else {
      rec.attack = job.attack;
      Rng rng(derive_seed(seed, 99));
      AttackScenario scenario = AttackScenario::random(job.attack, rng, pose);
      if (job.attack == AttackKind::Replace) {
        scenario.recorder_distance_m = rng.uniform(config.replace_min_m, config.replace_max_m);
        rec.replace_distance_m = scenario.recorder_distance_m;
      }
      utt = synthesize_attack(params, st.model, scenario);
    }
    const auto dynamic = measure(utt, pose);
    std::vector<double> group;
    if (config.mode == ProfileMode::TextIndependent) group = class_group_std(st.ti_profile, templates);
    const auto s = score_dynamic(dynamic, templates, options, group);
    rec.probability = s.probability;
    rec.combined = s.combined;
    try {
      rec.correlation = correlation_score(dynamic, templates);
    } catch (const DegenerateSequenceError&) {
      rec.correlation = 0.0;
    }
    try {
      rec.weighted = weighted_correlation_score(dynamic, templates, group, config.weight_mode);
    } catch (const DegenerateSequenceError&) {
      rec.weighted = 0.0;
    }
    result.trials[k] = rec;
  });
  return result;
}

}  // namespace tdl
