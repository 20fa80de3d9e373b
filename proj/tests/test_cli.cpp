#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "tdl/geometry.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run tdl_run(const tdl::testing::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(TDL_CLI) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// Last JSON line of stderr: the error payload comes after the config log.
json last_json_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

void scene(const tdl::testing::TempDir& dir, const std::string& name, json doc) {
  tdl::testing::write_bytes(dir / name, doc.dump());
}

const char* kPhrase = "DH IH S IH Z M AY V OY S P AE S W ER D";

}  // namespace

TEST_CASE("simulate, enroll and verify end to end") {
  tdl::testing::TempDir dir;
  for (int i = 1; i <= 5; ++i)
    scene(dir, "live" + std::to_string(i) + ".json", {{"kind", "live"}, {"phonemes", kPhrase}, {"seed", i}});
  scene(dir, "static.json", {{"kind", "static_playback"}, {"phonemes", kPhrase}, {"seed", 7}});
  std::string enroll_args;
  for (int i = 1; i <= 5; ++i) {
    const auto out = dir / ("s" + std::to_string(i));
    const auto r = tdl_run(dir, "simulate '" + (dir / ("live" + std::to_string(i) + ".json")).string() + "' --out '" +
                                    out.string() + "'");
    REQUIRE(r.code == 0);
    const auto manifest = json::parse(r.out);
    CHECK(manifest.at("phonemes") == 16);
    CHECK(fs::exists(out / "recording.wav"));
    CHECK(fs::exists(out / "alignment.json"));
    CHECK(fs::exists(out / "ground_truth.json"));
    if (i <= 3) enroll_args += " '" + (out / "recording.wav").string() + "' '" + (out / "alignment.json").string() + "'";
  }
  REQUIRE(tdl_run(dir, "simulate '" + (dir / "static.json").string() + "' --out '" + (dir / "st").string() + "'").code == 0);

  const auto profile = dir / "profile.json";
  const auto enrolled = tdl_run(dir, "enroll --profile '" + profile.string() + "' --user alice" + enroll_args);
  REQUIRE(enrolled.code == 0);
  CHECK(json::parse(slurp(profile)).at("templates").size() == 16);

  const std::string p = " --profile '" + profile.string() + "' ";
  auto verify = [&](const std::string& sub, const std::string& extra = "") {
    return tdl_run(dir, extra + " verify" + p + "'" + (dir / sub / "recording.wav").string() + "' '" +
                            (dir / sub / "alignment.json").string() + "'");
  };

  SECTION("live utterance") {
    const auto r = verify("s4");
    CHECK(r.code == 0);
    const auto d = json::parse(r.out);
    CHECK(d.at("verdict") == "LIVE");
    CHECK(d.at("version") == 1);
    CHECK(verify("s5").code == 0);
    const auto log = json::parse(r.err.substr(0, r.err.find('\n')));
    CHECK(log.at("log") == "config");
    CHECK(log.at("command") == "verify");
  }
  SECTION("static playback") {
    const auto r = verify("st");
    CHECK(r.code == 1);
    CHECK(json::parse(r.out).at("verdict") == "REPLAY");
  }
  SECTION("a threshold of one rejects everything") {
    CHECK(verify("s4", "--threshold 1.0").code == 1);
    CHECK(json::parse(verify("s4", "--method correlation").out).at("method") == "correlation");
  }
  SECTION("missing alignment") {
    const auto r = tdl_run(dir, "verify" + p + "'" + (dir / "s4" / "recording.wav").string() + "' '" +
                                    (dir / "nope.json").string() + "'");
    CHECK(r.code == 2);
    CHECK(last_json_line(r.err).at("error").at("kind") == "FileNotFound");
  }
  SECTION("beep echo ranging") {
    scene(dir, "beep.json", {{"kind", "beep"}, {"face_distance_m", 0.10}, {"seed", 3}});
    REQUIRE(tdl_run(dir, "simulate '" + (dir / "beep.json").string() + "' --out '" + (dir / "b").string() + "'").code == 0);
    const std::string beep = " --beep-echo '" + (dir / "b" / "beep_echo.wav").string() + "'";
    const auto r = verify("s4", beep);
    CHECK((r.code == 0 || r.code == 1));
    CHECK(r.err.find("\"beep_echo\"") != std::string::npos);
    const auto both = verify("s4", beep + " --distance-m 0.1");
    CHECK(both.code == 2);
    CHECK(last_json_line(both.err).at("error").at("kind") == "ConfigError");
  }
  SECTION("per-phoneme delays") {
    const auto plot = dir / "delays.dat";
    const auto r = tdl_run(dir, "--plot '" + plot.string() + "' tdoa '" + (dir / "s4" / "recording.wav").string() +
                                    "' '" + (dir / "s4" / "alignment.json").string() + "'");
    REQUIRE(r.code == 0);
    std::istringstream csv(r.out);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "index,phoneme,start,end,delay_samples,refined_delay,peak");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 16);
    CHECK(slurp(plot).rfind("# index delay_samples refined_delay", 0) == 0);
  }
}

TEST_CASE("pose subcommand applies the library transform") {
  tdl::testing::TempDir dir;
  const auto r = tdl_run(dir, "--angle-deg 30 --distance-m 0.08 pose --tdoa 63 -30.5");
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  const auto pose = tdl::DevicePose::reference();
  const tdl::PoseChange change{0.05, 30.0 * 3.14159265358979323846 / 180.0};
  const auto& t = doc.at("transforms");
  REQUIRE(t.size() == 2);
  CHECK(t[0].at("tdoa_out").get<double>() == tdl::transform_tdoa_for_pose(63.0, pose, change, 192000));
  // Nasal-like delays fall outside the distance window and take the height solve.
  CHECK(t[1].at("tdoa_out").get<double>() == tdl::adapt_delay(-30.5, pose, change, 192000));
  CHECK(doc.at("pivot") == "top_mic");
  const auto bad = tdl_run(dir, "--angle-deg 95 pose --tdoa 63");
  CHECK(bad.code == 2);
  CHECK(last_json_line(bad.err).at("error").at("kind") == "InvalidPoseError");
}

TEST_CASE("evaluate writes reports") {
  tdl::testing::TempDir dir;
  tdl::testing::write_bytes(dir / "exp.json", R"({"users":1,"passphrases_per_user":1,"live_trials":2,
      "attacks":{"static_playback":1,"mobile_playback":1},"words":[2,3]})");
  const auto r = tdl_run(dir, "--plot '" + (dir / "roc.dat").string() + "' evaluate '" + (dir / "exp.json").string() +
                                  "' --out '" + (dir / "rep").string() + "'");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("counts").at("live") == 2);
  CHECK(json::parse(slurp(dir / "rep" / "report.json")) == json::parse(r.out));
  CHECK(slurp(dir / "rep" / "report.csv").rfind("group,key,method", 0) == 0);
  CHECK(slurp(dir / "roc.dat").find("# method combined") != std::string::npos);
}

TEST_CASE("usage and config errors exit with 2") {
  tdl::testing::TempDir dir;
  const auto none = tdl_run(dir, "");
  CHECK(none.code == 2);
  CHECK(last_json_line(none.err).at("error").at("kind") == "UsageError");
  CHECK(tdl_run(dir, "--method magic pose --tdoa 1").code == 2);
  const auto cfg = tdl_run(dir, "--config '" + (dir / "missing.json").string() + "' pose --tdoa 1");
  CHECK(cfg.code == 2);
  CHECK(last_json_line(cfg.err).at("error").at("kind") == "FileNotFound");
  tdl::testing::write_bytes(dir / "bad.json", R"({"scoring":{"metod":"x"}})");
  const auto badcfg = tdl_run(dir, "--config '" + (dir / "bad.json").string() + "' pose --tdoa 1");
  CHECK(last_json_line(badcfg.err).at("error").at("kind") == "ConfigError");
}
