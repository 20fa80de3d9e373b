#include "tdl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include "tdl/errors.hpp"
#include "tdl/fft.hpp"
#include "tdl/kernels.hpp"

namespace tdl {
namespace {

using fft::Complex;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double kGapSeconds = 0.030;
constexpr double kMinPhonemeSeconds = 0.100;
constexpr double kMaxPhonemeSeconds = 0.300;
constexpr double kEdgeSeconds = 0.010;
constexpr double kExcitationRms = 0.1;
constexpr std::size_t kGuardSamples = 16;
// Zero tail reserved after each segment so the estimator's padded FFT length
// lands on the same plan size as the renderer's.
constexpr std::size_t kMeasureHeadroom = 128;

enum Stream : std::uint64_t { kLayout = 1, kJitter = 2, kNoise = 3, kExcitationBase = 1000 };

struct Band {
  double lo_hz;
  double hi_hz;
};

Band band_for(ArticulationClass c) {
  switch (c) {
    case ArticulationClass::VoicelessFricative: return {2500.0, 16000.0};
    case ArticulationClass::VoicelessStop: return {1000.0, 12000.0};
    case ArticulationClass::Aspirate: return {500.0, 14000.0};
    case ArticulationClass::Affricate: return {1500.0, 14000.0};
    case ArticulationClass::Nasal: return {80.0, 16000.0};
    default: return {80.0, 16000.0};
  }
}

// Time-domain excitation of n samples, RMS kExcitationRms, raised-cosine edges.
std::vector<double> excitation(ArticulationClass cls, std::size_t n, int fs, Rng& rng) {
  const std::size_t m = fft::next_plan_size(n);
  std::vector<Complex> spec(m / 2 + 1);
  const Band band = band_for(cls);
  const double bin_hz = static_cast<double>(fs) / static_cast<double>(m);
  const auto lo = static_cast<std::size_t>(std::ceil(band.lo_hz / bin_hz));
  const auto hi = std::min(spec.size() - 1, static_cast<std::size_t>(std::floor(band.hi_hz / bin_hz)));
  const bool voiced = is_voiced(cls) && cls != ArticulationClass::Affricate;
  // Breath/frication noise across the whole band.
  const double noise_level = voiced ? 0.35 : 1.0;
  for (std::size_t k = lo; k <= hi; ++k) spec[k] = noise_level * Complex(rng.normal(), rng.normal());
  if (voiced) {
    const double f0 = rng.uniform(100.0, 220.0);
    const double harmonic_level = std::sqrt(static_cast<double>(hi - lo + 1) / (band.hi_hz / f0));
    for (int h = 1; h * f0 <= band.hi_hz; ++h) {
      const auto k = static_cast<std::size_t>(std::lround(h * f0 / bin_hz));
      if (k < lo || k > hi) continue;
      spec[k] += harmonic_level / std::sqrt(static_cast<double>(h)) * std::polar(1.0, kTwoPi * rng.uniform());
    }
  }
  std::vector<double> full(m);
  fft::inverse(spec, full);
  std::vector<double> out(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double scale = ss > 0.0 ? kExcitationRms / std::sqrt(ss / static_cast<double>(n)) : 0.0;
  const auto edge = std::min(n / 2, static_cast<std::size_t>(std::lround(kEdgeSeconds * fs)));
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (i < edge) w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(edge));
    if (n - 1 - i < edge)
      w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - i) / static_cast<double>(edge));
    out[i] *= scale * w;
  }
  return out;
}

struct Placement {
  std::size_t offset = 0;   // segment start in the recording
  std::size_t length = 0;   // padded segment length
  std::size_t fft = 0;      // render transform length, >= length
  std::size_t core = 0;     // excitation length
  std::size_t pad = 0;      // leading zeros before the excitation
};

struct RenderJob {
  std::vector<std::string> labels;
  std::vector<ArticulationClass> classes;
  std::vector<Point> positions;
  DevicePose pose;
  int fs = 0;
  std::uint64_t seed = 0;
  double snr_db = 30.0;
  std::optional<EchoSpec> echo;
};

struct Layout {
  std::vector<std::size_t> cores;
  std::size_t gap = 0;
};

Layout draw_layout(std::size_t count, int fs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kLayout));
  Layout layout;
  layout.gap = static_cast<std::size_t>(std::lround(kGapSeconds * fs));
  for (std::size_t i = 0; i < count; ++i)
    layout.cores.push_back(
        static_cast<std::size_t>(std::lround(rng.uniform(kMinPhonemeSeconds, kMaxPhonemeSeconds) * fs)));
  return layout;
}

// Centre time of each phoneme as a fraction of the utterance, used by moving sources.
std::vector<double> centre_fractions(const Layout& layout) {
  std::vector<double> centres;
  double t = static_cast<double>(layout.gap);
  for (auto core : layout.cores) {
    centres.push_back(t + 0.5 * static_cast<double>(core));
    t += static_cast<double>(core + layout.gap);
  }
  for (auto& c : centres) c /= t;
  return centres;
}

RenderedUtterance render(const RenderJob& job, const Layout& layout) {
  const std::size_t count = job.labels.size();
  RenderedUtterance out;
  out.recording.sample_rate = job.fs;
  out.source_positions = job.positions;
  out.ground_truth.resize(count);

  const auto mics = mic_positions(job.pose);
  std::vector<Placement> placements(count);
  std::size_t cursor = layout.gap;
  for (std::size_t i = 0; i < count; ++i) {
    out.ground_truth[i] = pose_to_tdoa(job.pose, job.positions[i], job.fs);
    double reach = 0.5 * std::abs(out.ground_truth[i]);
    if (job.echo) reach = std::max(reach, job.echo->extra_delay_samples + 0.5 * std::abs(job.echo->tdoa_samples));
    auto& p = placements[i];
    p.core = layout.cores[i];
    p.pad = static_cast<std::size_t>(std::ceil(reach)) + kGuardSamples;
    p.fft = fft::next_plan_size(p.core + 2 * p.pad + kMeasureHeadroom);
    p.length = p.fft - kMeasureHeadroom;
    p.offset = cursor;
    cursor += p.length + layout.gap;
  }
  const std::size_t frames = cursor;
  out.recording.top.assign(frames, 0.0);
  out.recording.bottom.assign(frames, 0.0);

  std::vector<std::exception_ptr> failures(count);
  const auto n_jobs = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long ii = 0; ii < n_jobs; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const auto& p = placements[i];
      Rng rng(derive_seed(job.seed, kExcitationBase + i));
      const auto core = excitation(job.classes[i], p.core, job.fs, rng);
      std::vector<double> local(p.fft, 0.0);
      std::copy(core.begin(), core.end(), local.begin() + static_cast<std::ptrdiff_t>(p.pad));
      std::vector<Complex> spec(p.fft / 2 + 1);
      fft::forward(local, spec);
      if (p.fft % 2 == 0) spec.back() = 0.0;

      const double d_top = distance(job.positions[i], mics.top);
      const double d_bottom = distance(job.positions[i], mics.bottom);
      const double d_ref = std::min(d_top, d_bottom);
      const double half = 0.5 * out.ground_truth[i];
      std::vector<Complex> shifted(spec.size()), extra(spec.size());
      std::vector<double> channel(p.fft);
      for (int mic = 0; mic < 2; ++mic) {
        const double delay = mic == 0 ? half : -half;
        const double gain = d_ref / (mic == 0 ? d_top : d_bottom);
        kernels::parallel::phase_shift(spec, delay, gain, p.fft, shifted);
        if (job.echo) {
          const double echo_delay = job.echo->extra_delay_samples + (mic == 0 ? 0.5 : -0.5) * job.echo->tdoa_samples;
          kernels::parallel::phase_shift(spec, echo_delay, gain * job.echo->amplitude, p.fft, extra);
          for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] += extra[k];
        }
        fft::inverse(shifted, channel);
        auto& dest = mic == 0 ? out.recording.top : out.recording.bottom;
        const double scale = 1.0 / static_cast<double>(p.fft);
        for (std::size_t t = 0; t < p.length; ++t) dest[p.offset + t] = channel[t] * scale;
      }
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  // White noise relative to the power of the active (segment) samples.
  double power = 0.0;
  std::size_t active = 0;
  for (const auto& p : placements) {
    for (std::size_t t = p.offset + p.pad; t < p.offset + p.pad + p.core; ++t)
      power += out.recording.bottom[t] * out.recording.bottom[t];
    active += p.core;
  }
  if (active > 0) power /= static_cast<double>(active);
  if (power > 0.0 && std::isfinite(job.snr_db)) {
    const double sigma = std::sqrt(power / std::pow(10.0, job.snr_db / 10.0));
    Rng rng(derive_seed(job.seed, kNoise));
    for (std::size_t t = 0; t < frames; ++t) out.recording.top[t] += sigma * rng.normal();
    for (std::size_t t = 0; t < frames; ++t) out.recording.bottom[t] += sigma * rng.normal();
  }

  double peak = 0.0;
  for (std::size_t t = 0; t < frames; ++t)
    peak = std::max({peak, std::abs(out.recording.top[t]), std::abs(out.recording.bottom[t])});
  if (peak > 0.99) {
    const double scale = 0.99 / peak;
    for (auto& v : out.recording.top) v *= scale;
    for (auto& v : out.recording.bottom) v *= scale;
  }

  for (std::size_t i = 0; i < count; ++i)
    out.alignment.push_back({job.labels[i], placements[i].offset, placements[i].offset + placements[i].length});
  return out;
}

RenderJob job_from(const LiveParams& params, const VocalSourceModel& model) {
  if (params.sample_rate < kMinSampleRate) throw PreconditionError("sample rate below 44100 Hz");
  params.pose.validate();
  RenderJob job;
  job.labels = params.labels;
  job.pose = params.pose;
  job.fs = params.sample_rate;
  job.seed = params.seed;
  job.snr_db = params.snr_db;
  job.echo = params.echo;
  for (const auto& label : params.labels) job.classes.push_back(model.at(label).articulation);
  return job;
}

std::vector<Point> live_positions(const LiveParams& params, const VocalSourceModel& model) {
  Rng rng(derive_seed(params.seed, kJitter));
  std::vector<Point> positions;
  for (const auto& label : params.labels) {
    const auto& src = model.at(label);
    Point p{src.dy, src.dz};
    if (params.jitter) p.y += model.vertical_jitter_m(src) * rng.normal();
    positions.push_back(p);
  }
  return positions;
}

Point point_from_json(const nlohmann::json& j) { return {j.at("y").get<double>(), j.at("z").get<double>()}; }

nlohmann::json point_to_json(Point p) { return {{"y", p.y}, {"z", p.z}}; }

bool finite(Point p) { return std::isfinite(p.y) && std::isfinite(p.z); }

}  // namespace

RenderedUtterance synthesize_live(const LiveParams& params, const VocalSourceModel& model) {
  RenderJob job = job_from(params, model);
  job.positions = live_positions(params, model);
  return render(job, draw_layout(job.labels.size(), job.fs, job.seed));
}

std::string_view to_string(AttackKind k) noexcept {
  switch (k) {
    case AttackKind::StaticPlayback: return "static_playback";
    case AttackKind::MobilePlayback: return "mobile_playback";
    case AttackKind::Replace: return "replace";
  }
  return "static_playback";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "static_playback" || name == "static") return AttackKind::StaticPlayback;
  if (name == "mobile_playback" || name == "mobile") return AttackKind::MobilePlayback;
  if (name == "replace") return AttackKind::Replace;
  throw ScenarioError("unknown attack kind '" + std::string(name) + "'");
}

void AttackScenario::validate() const {
  switch (kind) {
    case AttackKind::StaticPlayback:
      if (!finite(source)) throw ScenarioError("static playback source is not finite");
      break;
    case AttackKind::MobilePlayback:
      if (!trajectory) throw ScenarioError("mobile playback needs a trajectory");
      if (!finite(trajectory->centre) || !std::isfinite(trajectory->start_phase) ||
          !std::isfinite(trajectory->sweep))
        throw ScenarioError("trajectory has non-finite parameters");
      if (!(trajectory->radius > 0.0) || trajectory->radius > 1.0)
        throw ScenarioError("trajectory radius must lie in (0, 1] m");
      if (trajectory->sweep == 0.0) throw ScenarioError("trajectory sweep must be non-zero");
      break;
    case AttackKind::Replace:
      if (!(recorder_distance_m >= kMinRecorderDistance))
        throw ScenarioError("replace recorder must be at least 0.25 m away");
      break;
  }
}

AttackScenario AttackScenario::random(AttackKind kind, Rng& rng, const DevicePose& pose) {
  AttackScenario s;
  s.kind = kind;
  switch (kind) {
    case AttackKind::StaticPlayback:
      s.source = {rng.uniform(-0.01, 0.14), pose.x - rng.uniform(0.02, 0.10)};
      break;
    case AttackKind::MobilePlayback: {
      Trajectory t;
      t.centre = {rng.uniform(0.0, 0.13), pose.x - rng.uniform(0.04, 0.09)};
      t.radius = rng.uniform(0.02, 0.035);
      t.start_phase = rng.uniform(0.0, kTwoPi);
      t.sweep = rng.uniform(0.5 * std::numbers::pi, kTwoPi) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      s.trajectory = t;
      break;
    }
    case AttackKind::Replace:
      s.recorder_distance_m = rng.uniform(0.25, 0.45);
      break;
  }
  return s;
}

RenderedUtterance synthesize_attack(const LiveParams& base, const VocalSourceModel& model,
                                    const AttackScenario& scenario) {
  scenario.validate();
  if (scenario.kind == AttackKind::Replace) {
    LiveParams moved = base;
    moved.pose.x = scenario.recorder_distance_m;
    return synthesize_live(moved, model);
  }
  RenderJob job = job_from(base, model);
  const Layout layout = draw_layout(job.labels.size(), job.fs, job.seed);
  if (scenario.kind == AttackKind::StaticPlayback) {
    job.positions.assign(job.labels.size(), scenario.source);
  } else {
    const auto& t = *scenario.trajectory;
    for (double f : centre_fractions(layout)) {
      const double angle = t.start_phase + t.sweep * f;
      job.positions.push_back({t.centre.y + t.radius * std::cos(angle), t.centre.z + t.radius * std::sin(angle)});
    }
  }
  return render(job, layout);
}

StereoRecording synthesize_beep_scene(double face_distance_m, int sample_rate, std::uint64_t seed,
                                      const BeepSpec& beep_spec) {
  if (!(face_distance_m >= kMinFaceDistance && face_distance_m <= kMaxFaceDistance))
    throw ScenarioError("face distance must lie in [0.03, 1.0] m");
  const auto beep = make_beep(sample_rate, beep_spec);
  Rng rng(derive_seed(seed, 7));
  const double clutter_distance = face_distance_m + rng.uniform(0.2, 0.5);
  const double body = std::round(0.005 * sample_rate);
  const double round_trip = 2.0 / kSpeedOfSound * sample_rate;
  const double tail = body + round_trip * clutter_distance + static_cast<double>(beep.size());
  const std::size_t n = fft::next_plan_size(static_cast<std::size_t>(std::ceil(tail)) + sample_rate / 100);

  std::vector<double> padded(n, 0.0);
  std::copy(beep.begin(), beep.end(), padded.begin());
  std::vector<Complex> spec(n / 2 + 1), acc(n / 2 + 1), part(n / 2 + 1);
  fft::forward(padded, spec);
  if (n % 2 == 0) spec.back() = 0.0;
  const std::pair<double, double> paths[] = {
      {body, 0.5},
      {body + round_trip * face_distance_m, 0.5 * 0.3},
      {body + round_trip * clutter_distance, 0.5 * 0.1},
  };
  for (const auto& [delay, gain] : paths) {
    kernels::parallel::phase_shift(spec, delay, gain, n, part);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += part[k];
  }
  StereoRecording rec;
  rec.sample_rate = sample_rate;
  rec.bottom.resize(n);
  fft::inverse(acc, rec.bottom);
  double power = 0.0;
  for (auto& v : rec.bottom) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < beep.size(); ++i) power += beep[i] * beep[i] * 0.25;
  power /= static_cast<double>(beep.size());
  const double sigma = std::sqrt(power / std::pow(10.0, 30.0 / 10.0));
  rec.top.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    rec.top[t] = 0.5 * rec.bottom[t] + sigma * rng.normal();
    rec.bottom[t] += sigma * rng.normal();
  }
  return rec;
}

Scene scene_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("version", 1) != 1) throw SchemaError("unsupported scene version");
    Scene s;
    s.kind = doc.value("kind", std::string("live"));
    if (doc.contains("phonemes")) {
      const auto& ph = doc.at("phonemes");
      if (ph.is_string()) {
        std::istringstream words(ph.get<std::string>());
        for (std::string w; words >> w;) s.labels.push_back(w);
      } else {
        s.labels = ph.get<std::vector<std::string>>();
      }
    }
    for (const auto& label : s.labels) PhonemeInventory::english().at(label);
    if (doc.contains("pose")) {
      const auto& p = doc.at("pose");
      s.pose.x = p.value("x", s.pose.x);
      s.pose.l1 = p.value("l1", s.pose.l1);
      s.pose.l2 = p.value("l2", s.pose.l2);
      s.pose.l = p.value("l", s.pose.l);
      s.pose.alpha = p.contains("alpha_deg") ? p.at("alpha_deg").get<double>() * std::numbers::pi / 180.0
                                            : p.value("alpha", 0.0);
      s.pose.validate();
    }
    s.sample_rate = doc.value("sample_rate", s.sample_rate);
    s.seed = doc.value("seed", s.seed);
    s.user_seed = doc.value("user_seed", s.user_seed);
    s.snr_db = doc.value("snr_db", s.snr_db);
    s.face_distance_m = doc.value("face_distance_m", s.face_distance_m);
    if (doc.contains("echo")) {
      const auto& e = doc.at("echo");
      s.echo = EchoSpec{e.value("extra_delay_samples", 50.0), e.value("amplitude", 0.5), e.value("tdoa_samples", 0.0)};
    }
    if (s.kind == "live" || s.kind == "beep") {
      if (s.kind == "live" && s.labels.empty()) throw ScenarioError("live scene needs phonemes");
      return s;
    }
    AttackScenario a;
    a.kind = parse_attack_kind(s.kind);
    if (s.labels.empty()) throw ScenarioError("attack scene needs phonemes");
    const nlohmann::json sc = doc.value("scenario", nlohmann::json::object());
    if (a.kind == AttackKind::StaticPlayback && sc.contains("source")) {
      a.source = point_from_json(sc.at("source"));
    } else if (a.kind == AttackKind::MobilePlayback && sc.contains("trajectory")) {
      const auto& t = sc.at("trajectory");
      Trajectory tr;
      tr.centre = point_from_json(t.at("centre"));
      tr.radius = t.at("radius").get<double>();
      tr.start_phase = t.value("start_phase", 0.0);
      tr.sweep = t.at("sweep").get<double>();
      a.trajectory = tr;
    } else if (a.kind == AttackKind::Replace && sc.contains("recorder_distance_m")) {
      a.recorder_distance_m = sc.at("recorder_distance_m").get<double>();
    } else {
      Rng rng(derive_seed(s.seed, 11));
      a = AttackScenario::random(a.kind, rng, s.pose);
    }
    a.validate();
    s.scenario = a;
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scene: ") + e.what());
  }
}

RenderedUtterance render_scene(const Scene& scene, const VocalSourceModel& model) {
  if (scene.kind == "beep") throw ScenarioError("beep scenes have no phoneme rendering");
  const VocalSourceModel user = scene.user_seed == 0 ? model : model.for_user(scene.user_seed);
  LiveParams params;
  params.labels = scene.labels;
  params.pose = scene.pose;
  params.sample_rate = scene.sample_rate;
  params.seed = scene.seed;
  params.snr_db = scene.snr_db;
  params.echo = scene.echo;
  if (!scene.scenario) return synthesize_live(params, user);
  return synthesize_attack(params, user, *scene.scenario);
}

nlohmann::json ground_truth_to_json(const RenderedUtterance& u) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["sample_rate"] = u.recording.sample_rate;
  doc["phonemes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < u.alignment.size(); ++i) {
    nlohmann::json entry = {{"phoneme", u.alignment[i].label},
                            {"start", u.alignment[i].start},
                            {"end", u.alignment[i].end},
                            {"delay_samples", u.ground_truth[i]}};
    entry["source"] = point_to_json(u.source_positions[i]);
    doc["phonemes"].push_back(std::move(entry));
  }
  return doc;
}

}  // namespace tdl
