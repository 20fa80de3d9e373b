#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdl/errors.hpp"
#include "tdl/evaluation.hpp"
#include "tdl/random.hpp"

using namespace tdl;
using Catch::Matchers::WithinAbs;

namespace {

// Dense grid sweep: the threshold minimizing |FAR - FRR| and the mean of both there.
double brute_force_eer(const LabeledScoreSet& s, int grid = 100000) {
  auto lo = std::min(*std::min_element(s.live_scores.begin(), s.live_scores.end()),
                     *std::min_element(s.attack_scores.begin(), s.attack_scores.end()));
  auto hi = std::max(*std::max_element(s.live_scores.begin(), s.live_scores.end()),
                     *std::max_element(s.attack_scores.begin(), s.attack_scores.end()));
  lo -= 1e-6;
  hi += 1e-6;
  auto live = s.live_scores, attack = s.attack_scores;
  std::sort(live.begin(), live.end());
  std::sort(attack.begin(), attack.end());
  double best = 2.0, value = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double t = lo + (hi - lo) * i / grid;
    const double frr = static_cast<double>(std::upper_bound(live.begin(), live.end(), t) - live.begin()) / live.size();
    const double far =
        static_cast<double>(attack.end() - std::upper_bound(attack.begin(), attack.end(), t)) / attack.size();
    if (std::abs(far - frr) < best) {
      best = std::abs(far - frr);
      value = 0.5 * (far + frr);
    }
  }
  return value;
}

LabeledScoreSet random_set(Rng& rng, std::size_t n_live, std::size_t n_attack, double separation) {
  LabeledScoreSet s;
  for (std::size_t i = 0; i < n_live; ++i) s.live_scores.push_back(separation + rng.normal());
  for (std::size_t i = 0; i < n_attack; ++i) s.attack_scores.push_back(rng.normal());
  return s;
}

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.seed = 3;
  c.users = 2;
  c.passphrases_per_user = 2;
  c.live_trials = 3;
  c.static_attacks = 2;
  c.mobile_attacks = 2;
  c.min_words = 2;
  c.max_words = 4;
  return c;
}

}  // namespace

TEST_CASE("ROC of a hand-enumerated set") {
  const LabeledScoreSet s{{0.9, 0.8, 0.7}, {0.2, 0.1, 0.3}};
  const auto r = roc(s);
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<RocPoint> expect{{-inf, 1, 1},         {0.1, 1, 2.0 / 3}, {0.2, 1, 1.0 / 3}, {0.3, 1, 0},
                                     {0.7, 2.0 / 3, 0},    {0.8, 1.0 / 3, 0}, {0.9, 0, 0},       {inf, 0, 0}};
  REQUIRE(r.size() == expect.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].threshold == expect[i].threshold);
    CHECK_THAT(r[i].tar, WithinAbs(expect[i].tar, 1e-15));
    CHECK_THAT(r[i].far, WithinAbs(expect[i].far, 1e-15));
  }
  CHECK(std::any_of(r.begin(), r.end(), [](const RocPoint& p) { return p.tar == 1.0 && p.far == 0.0; }));
  CHECK(eer(s) == 0.0);
  CHECK(accuracy(s, 0.5) == 1.0);
  CHECK(accuracy(s, 0.95) == 0.5);
}

TEST_CASE("ROC sweep properties") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto s = random_set(rng, 50 + i, 80, 0.0);
    // Ties across the two lists.
    s.attack_scores[0] = s.live_scores[0];
    const auto r = roc(s);
    std::vector<double> distinct = s.live_scores;
    distinct.insert(distinct.end(), s.attack_scores.begin(), s.attack_scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    REQUIRE(r.size() == distinct.size() + 2);
    REQUIRE(r.front().tar == 1.0);
    REQUIRE(r.back().far == 0.0);
    for (std::size_t k = 1; k < r.size(); ++k) {
      REQUIRE(r[k].threshold > r[k - 1].threshold);
      REQUIRE(r[k].tar <= r[k - 1].tar);
      REQUIRE(r[k].far <= r[k - 1].far);
    }
    // Same distribution on both sides: the curve hugs the diagonal (KS bound at 0.1 %).
    const double bound = 1.95 * std::sqrt((1.0 / s.live_scores.size()) + (1.0 / s.attack_scores.size()));
    for (const auto& p : r) REQUIRE(std::abs(p.tar - p.far) <= bound);
  }
}

TEST_CASE("empty score sets") {
  CHECK_THROWS_AS(roc({{}, {0.1}}), EmptySetError);
  CHECK_THROWS_AS(eer({{0.1}, {}}), EmptySetError);
  CHECK_THROWS_AS(accuracy({{}, {}}, 0.5), EmptySetError);
}

TEST_CASE("EER special cases") {
  CHECK(eer({{0.6, 0.7}, {0.1, 0.2}}) == 0.0);
  Rng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 301; ++i) v.push_back(rng.uniform());
  CHECK_THAT(eer({v, v}), WithinAbs(0.5, 1e-12));
  CHECK_THAT(eer({{0.3}, {0.3}}), WithinAbs(0.5, 1e-12));
  // Fully inverted sets.
  CHECK(eer({{0.1, 0.2}, {0.6, 0.7}}) == 1.0);
}

TEST_CASE("EER matches a dense threshold sweep") {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const auto s = random_set(rng, 600 + 13 * i, 700, rng.uniform(0.0, 3.0));
    REQUIRE_THAT(eer(s), WithinAbs(brute_force_eer(s), 1e-3));
  }
}

TEST_CASE("EER is invariant under increasing affine maps") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    auto s = random_set(rng, 40, 60, 1.0);
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
    auto t = s;
    for (auto& v : t.live_scores) v = a * v + b;
    for (auto& v : t.attack_scores) v = a * v + b;
    REQUIRE_THAT(eer(t), WithinAbs(eer(s), 1e-12));
  }
}

TEST_CASE("accuracy at the EER threshold is close to one minus EER") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 200;
    const auto s = random_set(rng, n, n, rng.uniform(0.0, 3.0));
    const auto e = eer_point(s);
    REQUIRE(std::abs(accuracy(s, e.threshold) - (1.0 - e.eer)) <= 1.0 / n + 1e-12);
  }
}

TEST_CASE("accuracy counts") {
  const LabeledScoreSet s{{0.9, 0.4, 0.6}, {0.5, 0.2, 0.7}};
  // t = 0.55: live 0.9, 0.6 accepted; attack 0.5, 0.2 rejected -> 4 of 6.
  CHECK(accuracy(s, 0.55) == 4.0 / 6.0);
  // t = 0.6 is fail-closed for the live 0.6.
  CHECK(accuracy(s, 0.6) == 3.0 / 6.0);
  CHECK(accuracy(s, 0.1) == 3.0 / 6.0);
  CHECK(accuracy(s, 1.0) == 3.0 / 6.0);
  CHECK(accuracy({{0.8, 0.9}, {0.1, 0.2, 0.3}}, 2.0) == 3.0 / 5.0);
  CHECK(accuracy({{0.8, 0.9}, {0.1, 0.2, 0.3}}, 0.5) == 1.0);
}

TEST_CASE("length bands and pose keys") {
  CHECK(length_band(2) == "2-4");
  CHECK(length_band(4) == "2-4");
  CHECK(length_band(5) == "5-7");
  CHECK(length_band(8) == "8-10");
  CHECK(length_band(10) == "8-10");
  CHECK(PoseSetting{30.0, 0.05}.key() == "30deg_5cm");
}

TEST_CASE("experiment config schema") {
  const auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"users":3,"passphrases_per_user":4,
      "attacks":{"static_playback":1,"replace":2},"words":[5,7],"method":"probability","threshold":0.3,
      "poses":[{"angle_deg":30},{"delta_x_m":0.1}],"pose_transform":false,"mode":"text_independent"})"));
  CHECK(c.users == 3);
  CHECK(c.static_attacks == 1);
  CHECK(c.mobile_attacks == 0);
  CHECK(c.replace_attacks == 2);
  CHECK(c.min_words == 5);
  CHECK(c.method == ScoreMethod::Probability);
  CHECK(c.poses.size() == 2);
  CHECK(c.poses[1] == PoseSetting{0.0, 0.1});
  CHECK_FALSE(c.pose_transform);
  CHECK(c.mode == ProfileMode::TextIndependent);
  CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());
  for (const char* bad : {R"({"users":0})", R"({"enrollment_trials":2})", R"({"words":[5,3]})",
                          R"({"attacks":{}})", R"({"method":"magic"})", R"({"threshold":1.5})",
                          R"({"poses":[{"angle_deg":95}]})", R"({"poses":[]})", R"({"replace_distance_m":[0.1,0.3]})",
                          R"({"users":"many"})", R"({"version":2})", R"({"mode":"freestyle"})"}) {
    INFO(bad);
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(bad)), ConfigError);
  }
}

TEST_CASE("a small experiment is reproducible and well formed") {
  const auto c = tiny();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  CHECK(a.report().dump() == b.report().dump());
  CHECK(a.csv() == b.csv());
  const std::size_t live = 2 * 2 * 3, attack = 2 * 2 * 4;
  REQUIRE(a.trials.size() == live + attack);
  const auto r = a.report();
  CHECK(r.at("counts").at("live") == live);
  CHECK(r.at("counts").at("attack").at("static_playback") == 8);
  for (const char* m : {"correlation", "probability", "combined", "weighted"}) {
    CHECK(r.at("overall").contains(m));
    CHECK(r.at("roc").contains(m));
  }
  CHECK(r.at("groups").at("attack_kind").contains("mobile_playback"));
  CHECK(r.at("groups").at("length_band").contains("2-4"));
  CHECK_FALSE(r.at("groups").at("length_band").contains("8-10"));
  CHECK(r.at("groups").at("pose").contains("0deg_0cm"));
  std::istringstream csv(a.csv());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "group,key,method,live,attack,eer,accuracy");
  for (const auto& t : a.trials) {
    CHECK(t.combined >= 0.0);
    CHECK(t.combined <= 1.0);
    CHECK(t.live == !t.attack.has_value());
  }
  const auto cols = a.roc_columns();
  CHECK(cols.find("# method combined") != std::string::npos);
  auto other = c;
  other.seed = 4;
  CHECK(run_experiment(other).report().dump() != a.report().dump());
}

TEST_CASE("simulated replays score below every simulated live trial") {
  const auto res = run_experiment(tiny());
  double live_min = 1.0, attack_max = 0.0;
  for (const auto& t : res.trials) {
    if (t.live) live_min = std::min(live_min, t.combined);
    else attack_max = std::max(attack_max, t.combined);
  }
  INFO("live min " << live_min << ", attack max " << attack_max);
  CHECK(attack_max < live_min);
}

TEST_CASE("longer passphrases do not raise the EER") {
  ExperimentConfig c;
  c.seed = 1;
  c.users = 4;
  c.passphrases_per_user = 6;
  c.live_trials = 5;
  c.static_attacks = 3;
  c.mobile_attacks = 3;
  const auto res = run_experiment(c);
  for (auto m : {ScoreMethod::Combined, ScoreMethod::Correlation}) {
    std::vector<double> by_band;
    for (const char* band : {"2-4", "5-7", "8-10"}) by_band.push_back(eer(res.scores(m, std::nullopt, std::string(band))));
    INFO(to_string(m) << ": " << by_band[0] << " " << by_band[1] << " " << by_band[2]);
    CHECK(by_band[1] <= by_band[0]);
    CHECK(by_band[2] <= by_band[1]);
  }
}
