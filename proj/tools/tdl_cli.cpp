// tdl: command-line front end for the TDoA liveness pipeline.
//
//   tdl simulate SCENE --out DIR
//   tdl enroll   --profile OUT --user ID [--passphrase ID] WAV ALIGN [WAV ALIGN ...]
//   tdl verify   --profile P WAV ALIGN [--angle-deg A] [--distance-m D | --beep-echo WAV]
//   tdl evaluate EXPERIMENT --out DIR
//   tdl tdoa     WAV ALIGN
//   tdl pose     --tdoa V [V ...] [--angle-deg A] [--distance-m D]
//
// Machine-readable output goes to stdout, logs and errors to stderr as JSON.
// Exit codes: 0 success / LIVE, 1 REPLAY, 2 error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdl/config.hpp"
#include "tdl/errors.hpp"
#include "tdl/evaluation.hpp"
#include "tdl/geometry.hpp"
#include "tdl/profiles.hpp"
#include "tdl/scoring.hpp"
#include "tdl/segmentation.hpp"
#include "tdl/signal_io.hpp"
#include "tdl/simulator.hpp"
#include "tdl/tdoa.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tdl;

namespace {

constexpr int kExitReplay = 1;
constexpr int kExitError = 2;

double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

struct Flags {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<double> threshold;
  std::optional<double> spacing_m;
  std::optional<double> angle_deg;
  std::optional<double> distance_m;
  std::string beep_echo;
  std::optional<std::uint64_t> seed;
  std::string plot_path;
};

ToolConfig effective_config(const Flags& f) {
  ToolConfig c = f.config_path.empty() ? ToolConfig{} : ToolConfig::load(f.config_path);
  if (f.method) c.method = parse_score_method(*f.method);
  if (f.threshold) c.threshold = *f.threshold;
  if (f.spacing_m) {
    c.device.mic_spacing_m = *f.spacing_m;
    c.device.validate();
  }
  if (f.seed) c.seed = *f.seed;
  return c;
}

void log_header(const std::string& command, const ToolConfig& c) {
  json line = {{"log", "config"}, {"command", command}, {"config", c.to_json()}};
  line["config"]["scoring"]["effective_threshold"] = c.effective_threshold();
  std::cerr << line.dump() << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

struct Input {
  StereoRecording recording;
  std::vector<PhonemeSegment> alignment;
};

Input load_input(const std::string& wav, const std::string& align) {
  Input in;
  in.recording = load_wav(wav);
  in.alignment = load_alignment(align, in.recording);
  return in;
}

int cmd_simulate(const Flags& f, const std::string& scene_path, const std::string& out_dir, int bit_depth) {
  const ToolConfig cfg = effective_config(f);
  log_header("simulate", cfg);
  Scene scene = scene_from_json(read_json(scene_path));
  if (f.seed) scene.seed = *f.seed;
  fs::create_directories(out_dir);
  json manifest = {{"version", 1}, {"kind", scene.kind}, {"seed", scene.seed}};
  if (scene.kind == "beep") {
    const auto rec = synthesize_beep_scene(scene.face_distance_m, scene.sample_rate, scene.seed);
    const fs::path wav = fs::path(out_dir) / "beep_echo.wav";
    write_wav(rec, wav, bit_depth);
    manifest["files"] = {{"beep_echo", wav.filename().string()}};
    manifest["face_distance_m"] = scene.face_distance_m;
  } else {
    const auto u = render_scene(scene);
    const fs::path dir(out_dir);
    write_wav(u.recording, dir / "recording.wav", bit_depth);
    write_alignment(dir / "alignment.json", u.alignment, u.recording.sample_rate);
    write_text(dir / "ground_truth.json", ground_truth_to_json(u).dump(2) + "\n");
    manifest["files"] = {{"recording", "recording.wav"},
                         {"alignment", "alignment.json"},
                         {"ground_truth", "ground_truth.json"}};
    manifest["phonemes"] = u.alignment.size();
  }
  std::cout << manifest.dump(2) << '\n';
  return 0;
}

DevicePose pose_from_flags(const Flags& f, DevicePose base = DevicePose::reference()) {
  if (f.distance_m) base.x = *f.distance_m;
  if (f.angle_deg) base.alpha = deg_to_rad(*f.angle_deg);
  base.validate();
  return base;
}

int cmd_enroll(const Flags& f, const std::string& profile_path, const std::string& user, const std::string& passphrase,
               const std::string& mode_name, bool append, const std::vector<std::string>& files) {
  const ToolConfig cfg = effective_config(f);
  log_header("enroll", cfg);
  if (files.empty() || files.size() % 2 != 0)
    throw PreconditionError("enroll expects WAV ALIGNMENT pairs, got " + std::to_string(files.size()) + " paths");
  std::vector<Input> inputs;
  for (std::size_t i = 0; i < files.size(); i += 2) inputs.push_back(load_input(files[i], files[i + 1]));
  EnrollmentOptions opts{cfg.tdoa_method, cfg.geometry.speed_of_sound};
  const ProfileMode mode = parse_profile_mode(mode_name);

  UserProfile profile;
  if (mode == ProfileMode::TextDependent) {
    std::vector<EnrollmentTrial> trials;
    for (const auto& in : inputs) trials.push_back({in.recording, in.alignment});
    if (append && fs::exists(profile_path)) {
      profile = load_profile(profile_path);
      if (profile.mode != ProfileMode::TextDependent) throw PreconditionError("cannot append to a text-independent profile");
      add_passphrase(profile, passphrase, trials, opts);
    } else {
      const DevicePose pose = pose_from_flags(f);
      profile = enroll_text_dependent(user, passphrase, trials, pose, cfg.device, opts);
    }
  } else {
    std::map<std::string, std::vector<PhonemeSample>> samples;
    for (const auto& in : inputs)
      for (const auto& seg : in.alignment) samples[seg.label].push_back({in.recording, seg});
    profile = enroll_text_independent(user, samples, pose_from_flags(f), cfg.device, opts);
  }
  save_profile(profile, profile_path);
  json summary = {{"version", 1},
                  {"user_id", profile.user_id},
                  {"mode", std::string(to_string(profile.mode))},
                  {"profile", profile_path},
                  {"trials", inputs.size()}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_verify(const Flags& f, const std::string& profile_path, const std::string& passphrase, const std::string& wav,
               const std::string& align) {
  const ToolConfig cfg = effective_config(f);
  log_header("verify", cfg);
  const UserProfile profile = load_profile(profile_path);
  const Input in = load_input(wav, align);

  DevicePose now = profile.enrollment_pose;
  if (f.angle_deg) now.alpha = deg_to_rad(*f.angle_deg);
  if (!f.beep_echo.empty()) {
    if (f.distance_m) throw ConfigError("--distance-m and --beep-echo are mutually exclusive");
    const auto echo = load_wav(f.beep_echo);
    const auto est = estimate_face_distance(echo, make_beep(echo.sample_rate), cfg.geometry.speed_of_sound);
    now.x = est.distance_m;
    std::cerr << json{{"log", "beep_echo"}, {"distance_m", est.distance_m}}.dump() << '\n';
  } else if (f.distance_m) {
    now.x = *f.distance_m;
  }
  now.validate();

  TdoaDynamic dynamic = measure_dynamic(in.recording, in.alignment, cfg.tdoa_method, cfg.device,
                                        cfg.geometry.speed_of_sound);
  if (!(cfg.device == profile.device) || in.recording.sample_rate != profile.sample_rate)
    dynamic = normalize_dynamic(dynamic, cfg.device, profile.device, profile.sample_rate);

  std::vector<PhonemeTemplate> templates;
  std::vector<double> group;
  if (profile.mode == ProfileMode::TextDependent) {
    templates = profile.passphrase(passphrase);
  } else {
    const auto labels = dynamic.labels();
    templates = assemble_template(profile, labels);
    group = class_group_std(profile, templates);
  }
  const PoseChange change{now.x - profile.enrollment_pose.x, now.alpha - profile.enrollment_pose.alpha};
  if (!change.is_identity())
    templates = adapt_templates(templates, profile.enrollment_pose, change, profile.sample_rate, cfg.geometry);

  ScoringOptions opts;
  opts.method = cfg.method;
  opts.weight_mode = cfg.weight_mode;
  opts.weighted_correlation = cfg.method == ScoreMethod::Weighted;
  const auto score = score_dynamic(dynamic, templates, opts, group);
  const Decision d = decide(score, cfg.effective_threshold(), cfg.method);
  json out = decision_to_json(d);
  out["pose"] = {{"x", now.x}, {"alpha_deg", rad_to_deg(now.alpha)}};
  std::cout << out.dump(2) << '\n';
  return d.verdict == Verdict::Live ? 0 : kExitReplay;
}

int cmd_evaluate(const Flags& f, const std::string& experiment_path, const std::string& out_dir) {
  const ToolConfig cfg = effective_config(f);
  log_header("evaluate", cfg);
  ExperimentConfig exp = ExperimentConfig::from_json(read_json(experiment_path));
  if (f.seed) exp.seed = *f.seed;
  if (f.method) exp.method = cfg.method;
  if (f.threshold) exp.threshold = *f.threshold;
  exp.validate();
  const ExperimentResult result = run_experiment(exp);
  const json report = result.report();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    write_text(fs::path(out_dir) / "report.csv", result.csv());
  }
  if (!f.plot_path.empty()) write_text(f.plot_path, result.roc_columns());
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_tdoa(const Flags& f, const std::string& wav, const std::string& align) {
  const ToolConfig cfg = effective_config(f);
  log_header("tdoa", cfg);
  const Input in = load_input(wav, align);
  const auto dyn = measure_dynamic(in.recording, in.alignment, cfg.tdoa_method, cfg.device,
                                   cfg.geometry.speed_of_sound);
  std::ostringstream csv;
  csv.precision(17);
  csv << "index,phoneme,start,end,delay_samples,refined_delay,peak\n";
  for (std::size_t i = 0; i < dyn.measurements.size(); ++i) {
    const auto& m = dyn.measurements[i];
    csv << i << ',' << m.label << ',' << in.alignment[i].start << ',' << in.alignment[i].end << ','
        << m.delay_samples << ',' << m.refined_delay << ',' << m.peak_value << '\n';
  }
  std::cout << csv.str();
  if (!f.plot_path.empty()) {
    std::ostringstream cols;
    cols.precision(17);
    cols << "# index delay_samples refined_delay\n";
    for (std::size_t i = 0; i < dyn.measurements.size(); ++i)
      cols << i << ' ' << dyn.measurements[i].delay_samples << ' ' << dyn.measurements[i].refined_delay << '\n';
    write_text(f.plot_path, cols.str());
  }
  return 0;
}

int cmd_pose(const Flags& f, const std::vector<double>& tdoas, const DevicePose& from, int sample_rate) {
  const ToolConfig cfg = effective_config(f);
  log_header("pose", cfg);
  from.validate();
  if (tdoas.empty()) throw PreconditionError("pose needs at least one --tdoa value");
  PoseChange change;
  if (f.distance_m) change.delta_x = *f.distance_m - from.x;
  if (f.angle_deg) change.alpha = deg_to_rad(*f.angle_deg) - from.alpha;
  json out = {{"version", 1},
              {"sample_rate", sample_rate},
              {"pivot", std::string(to_string(cfg.geometry.pivot))},
              {"from", {{"x", from.x}, {"l1", from.l1}, {"l2", from.l2}, {"l", from.l}, {"alpha_deg", rad_to_deg(from.alpha)}}},
              {"change", {{"delta_x_m", change.delta_x}, {"alpha_deg", rad_to_deg(change.alpha)}}}};
  json rows = json::array();
  for (double t : tdoas)
    rows.push_back({{"tdoa_in", t}, {"tdoa_out", adapt_delay(t, from, change, sample_rate, cfg.geometry)}});
  out["transforms"] = std::move(rows);
  std::cout << out.dump(2) << '\n';
  return 0;
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TDoA-based voice liveness toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "JSON tool config");
  app.add_option("--method", f.method, "correlation|probability|combined|weighted");
  app.add_option("--threshold", f.threshold, "decision threshold");
  app.add_option("--device-spacing-m", f.spacing_m, "microphone spacing of the verifying device (m)");
  app.add_option("--angle-deg", f.angle_deg, "device tilt (degrees)");
  app.add_option("--distance-m", f.distance_m, "horizontal mouth-to-device distance (m)");
  app.add_option("--beep-echo", f.beep_echo, "two-channel beep echo recording used to estimate the distance");
  app.add_option("--seed", f.seed, "seed for every random draw");
  app.add_option("--plot", f.plot_path, "write gnuplot columns (ROC for evaluate, delays for tdoa)");

  std::string scene, out_dir, profile, user = "user", passphrase = "default", mode = "text_dependent";
  std::string wav, align, experiment;
  int bit_depth = 24;
  bool append = false;
  std::vector<std::string> files;
  std::vector<double> tdoas;
  DevicePose from = DevicePose::reference();
  double from_alpha_deg = 0.0;
  int pose_rate = 192000;

  auto* sim = app.add_subcommand("simulate", "render a scene to WAV + alignment + ground truth");
  sim->add_option("scene", scene)->required();
  sim->add_option("--out", out_dir)->required();
  sim->add_option("--bit-depth", bit_depth)->check(CLI::IsMember({16, 24, 32}));

  auto* enr = app.add_subcommand("enroll", "build a profile from enrollment recordings");
  enr->add_option("--profile", profile)->required();
  enr->add_option("--user", user);
  enr->add_option("--passphrase", passphrase);
  enr->add_option("--mode", mode, "text_dependent|text_independent");
  enr->add_flag("--append", append, "add a passphrase to an existing profile");
  enr->add_option("files", files, "WAV ALIGNMENT pairs")->required();

  auto* ver = app.add_subcommand("verify", "score a recording against a profile");
  ver->add_option("--profile", profile)->required();
  ver->add_option("--passphrase", passphrase);
  ver->add_option("recording", wav)->required();
  ver->add_option("alignment", align)->required();

  auto* eva = app.add_subcommand("evaluate", "run a simulated experiment");
  eva->add_option("experiment", experiment)->required();
  eva->add_option("--out", out_dir);

  auto* td = app.add_subcommand("tdoa", "per-phoneme delays as CSV");
  td->add_option("recording", wav)->required();
  td->add_option("alignment", align)->required();

  auto* po = app.add_subcommand("pose", "transform TDoAs to a new device pose");
  po->add_option("--tdoa", tdoas, "source TDoA values (samples)")->required();
  po->add_option("--x", from.x, "original horizontal distance (m)");
  po->add_option("--l1", from.l1);
  po->add_option("--l2", from.l2);
  po->add_option("--alpha-deg", from_alpha_deg, "original tilt (degrees)");
  po->add_option("--sample-rate", pose_rate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return kExitError;
  }

  try {
    if (*sim) return cmd_simulate(f, scene, out_dir, bit_depth);
    if (*enr) return cmd_enroll(f, profile, user, passphrase, mode, append, files);
    if (*ver) return cmd_verify(f, profile, passphrase, wav, align);
    if (*eva) return cmd_evaluate(f, experiment, out_dir);
    if (*td) return cmd_tdoa(f, wav, align);
    if (*po) {
      if (po->count("--l1") + po->count("--l2") > 0) from.l = from.l1 + from.l2;
      from.alpha = deg_to_rad(from_alpha_deg);
      return cmd_pose(f, tdoas, from, pose_rate);
    }
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return kExitError;
  }
  return kExitError;
}
