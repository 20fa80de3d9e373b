#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <numbers>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "tdl/errors.hpp"
#include "tdl/phonemes.hpp"
#include "tdl/random.hpp"
#include "tdl/segmentation.hpp"
#include "tdl/simulator.hpp"

using namespace tdl;
using nlohmann::json;
using tdl::testing::TempDir;

namespace {

StereoRecording silence(std::size_t frames, int rate = 48000) {
  StereoRecording r;
  r.sample_rate = rate;
  r.top.assign(frames, 0.0);
  r.bottom.assign(frames, 0.0);
  return r;
}

void add_burst(StereoRecording& r, std::size_t start, std::size_t length, double amp = 0.5) {
  for (std::size_t i = 0; i < length; ++i) {
    const double v = amp * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / r.sample_rate);
    r.top[start + i] = v;
    r.bottom[start + i] = v;
  }
}

void add_noise(StereoRecording& r, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& v : r.top) v += sigma * rng.normal();
  for (auto& v : r.bottom) v += sigma * rng.normal();
}

bool sorted_disjoint(const std::vector<PhonemeSegment>& s, std::size_t frames) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i].start < s[i].end && s[i].end <= frames)) return false;
    if (i > 0 && s[i].start < s[i - 1].end) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("inventory has exactly 44 unique symbols") {
  const auto& inv = PhonemeInventory::english();
  REQUIRE(inv.size() == 44);
  std::set<std::string_view> seen;
  int vowels = 0;
  for (const auto& p : inv.symbols()) {
    seen.insert(p.symbol);
    vowels += p.is_vowel();
  }
  CHECK(seen.size() == 44);
  CHECK(vowels > 0);
  CHECK(vowels < 44);
  CHECK(inv.at("M").articulation == ArticulationClass::Nasal);
  CHECK(inv.at("K").articulation == ArticulationClass::VoicelessStop);
  CHECK_FALSE(inv.contains("XX"));
  CHECK_THROWS_AS(inv.at("XX"), UnknownPhonemeError);
}

TEST_CASE("two-segment alignment on a 9600-sample recording") {
  const auto rec = silence(9600);
  const json doc = {{"version", 1},
                    {"sample_rate", 48000},
                    {"segments", {{{"phoneme", "AA"}, {"start", 0}, {"end", 4000}},
                                  {{"phoneme", "S"}, {"start", 4200}, {"end", 8000}}}}};
  const auto segs = parse_alignment(doc, rec);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0] == PhonemeSegment{"AA", 0, 4000});
  CHECK(segs[1] == PhonemeSegment{"S", 4200, 8000});
}

TEST_CASE("alignment errors") {
  const auto rec = silence(9600);
  auto doc_with = [](json segments, int rate = 48000) {
    return json{{"version", 1}, {"sample_rate", rate}, {"segments", segments}};
  };
  SECTION("segment past the end") {
    CHECK_THROWS_AS(parse_alignment(doc_with({{{"phoneme", "AA"}, {"start", 0}, {"end", 10000}}}), rec),
                    InvalidAlignmentError);
  }
  SECTION("overlap") {
    CHECK_THROWS_AS(parse_alignment(doc_with({{{"phoneme", "AA"}, {"start", 0}, {"end", 4000}},
                                              {{"phoneme", "S"}, {"start", 3000}, {"end", 5000}}}),
                                    rec),
                    InvalidAlignmentError);
  }
  SECTION("empty segment") {
    CHECK_THROWS_AS(parse_alignment(doc_with({{{"phoneme", "AA"}, {"start", 100}, {"end", 100}}}), rec),
                    InvalidAlignmentError);
  }
  SECTION("rate mismatch") {
    CHECK_THROWS_AS(parse_alignment(doc_with({{{"phoneme", "AA"}, {"start", 0}, {"end", 100}}}, 96000), rec),
                    RateMismatchError);
  }
  SECTION("unknown label") {
    CHECK_THROWS_AS(parse_alignment(doc_with({{{"phoneme", "QQ"}, {"start", 0}, {"end", 100}}}), rec),
                    UnknownPhonemeError);
  }
  SECTION("future version") {
    json doc = doc_with({{{"phoneme", "AA"}, {"start", 0}, {"end", 100}}});
    doc["version"] = 2;
    CHECK_THROWS_AS(parse_alignment(doc, rec), SchemaError);
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_alignment("/nonexistent/a.json", rec), FileNotFoundError);
  }
}

TEST_CASE("alignment file round trip") {
  TempDir dir;
  const auto rec = silence(9600);
  const std::vector<PhonemeSegment> segs = {{"HH", 10, 2000}, {"AH", 2000, 5000}, {"L", 5100, 9600}};
  write_alignment(dir / "a.json", segs, 48000);
  CHECK(load_alignment(dir / "a.json", rec) == segs);
  std::ifstream in(dir / "a.json");
  const json doc = json::parse(in);
  CHECK(doc.at("version") == 1);
  CHECK(doc.at("segments").size() == 3);
}

TEST_CASE("simulator alignment matches its ground truth") {
  LiveParams p;
  p.labels = {"HH", "EH", "L", "OW", "M"};
  p.seed = 3;
  const auto u = synthesize_live(p, VocalSourceModel::default_model());
  TempDir dir;
  write_alignment(dir / "sim.json", u.alignment, u.recording.sample_rate);
  const auto loaded = load_alignment(dir / "sim.json", u.recording);
  REQUIRE(loaded.size() == 5);
  const json truth = ground_truth_to_json(u);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(loaded[i].label == p.labels[i]);
    CHECK(loaded[i].start == truth.at("phonemes")[i].at("start").get<std::size_t>());
    CHECK(loaded[i].end == truth.at("phonemes")[i].at("end").get<std::size_t>());
  }
  CHECK(sorted_disjoint(loaded, u.recording.frames()));
}

TEST_CASE("energy segmenter on silence returns nothing") {
  CHECK(segment_by_energy(silence(48000)).empty());
}

TEST_CASE("single burst is one segment within one frame of its bounds") {
  auto rec = silence(48000);
  const std::size_t start = 14400, len = 2400;  // 300 ms in, 50 ms long
  add_burst(rec, start, len);
  add_noise(rec, 1e-4, 1);
  const auto segs = segment_by_energy(rec);
  REQUIRE(segs.size() == 1);
  const std::size_t frame = 960;
  CHECK(segs[0].label == "?");
  CHECK(segs[0].start + frame >= start);
  CHECK(segs[0].start <= start + frame);
  CHECK(segs[0].end + frame >= start + len);
  CHECK(segs[0].end <= start + len + frame);
}

TEST_CASE("two bursts 100 ms apart are two segments") {
  auto rec = silence(48000);
  add_burst(rec, 9600, 2400);
  add_burst(rec, 9600 + 2400 + 4800, 2400);
  add_noise(rec, 1e-4, 2);
  const auto segs = segment_by_energy(rec);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].end <= segs[1].start);
}

TEST_CASE("energy segmentation is gain invariant and always sorted") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto rec = silence(48000);
    std::size_t pos = 2000;
    while (pos + 6000 < rec.frames()) {
      const auto len = static_cast<std::size_t>(rng.integer(800, 4000));
      add_burst(rec, pos, len, rng.uniform(0.05, 0.5));
      pos += len + static_cast<std::size_t>(rng.integer(1500, 6000));
    }
    add_noise(rec, 1e-4, 100 + trial);
    const auto base = segment_by_energy(rec);
    CHECK(sorted_disjoint(base, rec.frames()));
    auto scaled = rec;
    const double g = rng.uniform(0.01, 1.9);
    for (auto& v : scaled.top) v *= g;
    for (auto& v : scaled.bottom) v *= g;
    CHECK(segment_by_energy(scaled) == base);
  }
}

TEST_CASE("segmenter reads the bottom channel") {
  auto rec = silence(48000);
  add_burst(rec, 9600, 2400);
  std::fill(rec.bottom.begin(), rec.bottom.end(), 0.0);
  CHECK(segment_by_energy(rec).empty());
}

TEST_CASE("energy segmenter rejects non-positive frame") {
  EnergySegmenterOptions o;
  o.frame_ms = 0.0;
  CHECK_THROWS_AS(segment_by_energy(silence(100), o), PreconditionError);
}
