#include "tdl/profiles.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "tdl/errors.hpp"
#include "tdl/phonemes.hpp"

namespace tdl {
namespace {

using nlohmann::json;

std::vector<TdoaDynamic> measure_trials(std::span<const EnrollmentTrial> trials, const DeviceSpec& device,
                                        const EnrollmentOptions& options) {
  if (trials.size() < static_cast<std::size_t>(kMinEnrollmentTrials))
    throw InsufficientTrialsError("text-dependent enrollment needs at least 3 trials, got " +
                                  std::to_string(trials.size()));
  const int rate = trials.front().recording.sample_rate;
  std::vector<TdoaDynamic> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    if (t.recording.sample_rate != rate) throw RateMismatchError("enrollment trials use different sample rates");
    out.push_back(measure_dynamic(t.recording, t.alignment, options.method, device, options.speed_of_sound));
  }
  return out;
}

json pose_to_json(const DevicePose& p) {
  return {{"x", p.x}, {"l1", p.l1}, {"l2", p.l2}, {"l", p.l}, {"alpha", p.alpha}};
}

DevicePose pose_from_json(const json& j) {
  DevicePose p;
  p.x = j.at("x").get<double>();
  p.l1 = j.at("l1").get<double>();
  p.l2 = j.at("l2").get<double>();
  p.l = j.at("l").get<double>();
  p.alpha = j.value("alpha", 0.0);
  return p;
}

json template_to_json(const PhonemeTemplate& t) {
  return {{"label", t.label},
          {"mean_delay", t.mean_delay},
          {"std_delay", t.std_delay},
          {"trial_count", t.trial_count},
          {"trials", t.trial_delays}};
}

PhonemeTemplate template_from_json(const json& j) {
  PhonemeTemplate t;
  t.label = j.at("label").get<std::string>();
  t.mean_delay = j.at("mean_delay").get<double>();
  t.std_delay = j.at("std_delay").get<double>();
  t.trial_count = j.at("trial_count").get<int>();
  if (j.contains("trials")) t.trial_delays = j.at("trials").get<std::vector<double>>();
  if (t.std_delay < 0.0 || t.trial_count < 1) throw SchemaError("template '" + t.label + "' violates its invariants");
  PhonemeInventory::english().at(t.label);
  return t;
}

}  // namespace

std::string_view to_string(ProfileMode m) noexcept {
  return m == ProfileMode::TextDependent ? "text_dependent" : "text_independent";
}

ProfileMode parse_profile_mode(std::string_view name) {
  if (name == "text_dependent") return ProfileMode::TextDependent;
  if (name == "text_independent") return ProfileMode::TextIndependent;
  throw SchemaError("unknown profile mode '" + std::string(name) + "'");
}

const std::vector<PhonemeTemplate>& UserProfile::passphrase(const std::string& passphrase_id) const {
  const auto it = passphrase_templates.find(passphrase_id);
  if (it == passphrase_templates.end())
    throw PreconditionError("profile '" + user_id + "' has no passphrase '" + passphrase_id + "'");
  return it->second;
}

PhonemeTemplate template_from_delays(std::string label, std::span<const double> delays) {
  if (delays.empty()) throw InsufficientTrialsError("template '" + label + "' has no trials");
  PhonemeTemplate t;
  t.label = std::move(label);
  t.trial_count = static_cast<int>(delays.size());
  t.trial_delays.assign(delays.begin(), delays.end());
  const double n = static_cast<double>(delays.size());
  t.mean_delay = std::accumulate(delays.begin(), delays.end(), 0.0) / n;
  if (delays.size() > 1) {
    double ss = 0.0;
    for (double d : delays) ss += (d - t.mean_delay) * (d - t.mean_delay);
    t.std_delay = std::sqrt(ss / (n - 1.0));
  }
  return t;
}

std::vector<PhonemeTemplate> templates_from_dynamics(std::span<const TdoaDynamic> trials) {
  if (trials.size() < static_cast<std::size_t>(kMinEnrollmentTrials))
    throw InsufficientTrialsError("need at least 3 trials, got " + std::to_string(trials.size()));
  const auto labels = trials.front().labels();
  for (std::size_t k = 1; k < trials.size(); ++k)
    if (trials[k].labels() != labels)
      throw AlignmentMismatchError("trial " + std::to_string(k) + " has a different phoneme sequence");
  std::vector<PhonemeTemplate> out;
  out.reserve(labels.size());
  std::vector<double> column(trials.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t k = 0; k < trials.size(); ++k) column[k] = trials[k].measurements[i].delay_samples;
    out.push_back(template_from_delays(labels[i], column));
  }
  return out;
}

UserProfile enroll_text_dependent(const std::string& user_id, const std::string& passphrase_id,
                                  std::span<const EnrollmentTrial> trials, const DevicePose& pose,
                                  const DeviceSpec& device, const EnrollmentOptions& options) {
  pose.validate();
  device.validate();
  UserProfile profile;
  profile.user_id = user_id;
  profile.mode = ProfileMode::TextDependent;
  profile.enrollment_pose = pose;
  profile.device = device;
  const auto dynamics = measure_trials(trials, device, options);
  profile.sample_rate = dynamics.front().sample_rate;
  profile.passphrase_templates[passphrase_id] = templates_from_dynamics(dynamics);
  return profile;
}

void add_passphrase(UserProfile& profile, const std::string& passphrase_id, std::span<const EnrollmentTrial> trials,
                    const EnrollmentOptions& options) {
  if (profile.mode != ProfileMode::TextDependent)
    throw PreconditionError("passphrases can only be added to a text-dependent profile");
  const auto dynamics = measure_trials(trials, profile.device, options);
  if (dynamics.front().sample_rate != profile.sample_rate)
    throw RateMismatchError("passphrase trials do not match the profile sample rate");
  profile.passphrase_templates[passphrase_id] = templates_from_dynamics(dynamics);
}

UserProfile profile_from_phoneme_delays(const std::string& user_id,
                                        const std::map<std::string, std::vector<double>>& delays,
                                        const DevicePose& pose, const DeviceSpec& device, int sample_rate) {
  pose.validate();
  device.validate();
  const auto& inventory = PhonemeInventory::english();
  for (const auto& [label, _] : delays) inventory.at(label);
  std::vector<std::string> missing;
  for (const auto& info : inventory.symbols()) {
    const auto it = delays.find(std::string(info.symbol));
    if (it == delays.end() || it->second.size() < static_cast<std::size_t>(kMinEnrollmentTrials))
      missing.emplace_back(info.symbol);
  }
  if (!missing.empty()) throw IncompleteInventoryError(missing);
  UserProfile profile;
  profile.user_id = user_id;
  profile.mode = ProfileMode::TextIndependent;
  profile.enrollment_pose = pose;
  profile.device = device;
  profile.sample_rate = sample_rate;
  for (const auto& [label, values] : delays) profile.phoneme_templates[label] = template_from_delays(label, values);
  return profile;
}

UserProfile enroll_text_independent(const std::string& user_id,
                                    const std::map<std::string, std::vector<PhonemeSample>>& samples,
                                    const DevicePose& pose, const DeviceSpec& device,
                                    const EnrollmentOptions& options) {
  int rate = 0;
  std::map<std::string, std::vector<double>> delays;
  for (const auto& [label, list] : samples) {
    auto& out = delays[label];
    for (const auto& s : list) {
      if (rate == 0) rate = s.recording.sample_rate;
      if (s.recording.sample_rate != rate) throw RateMismatchError("enrollment samples use different sample rates");
      PhonemeSegment seg = s.segment;
      seg.label = label;
      out.push_back(estimate_tdoa(s.recording, seg, options.method, device, options.speed_of_sound).delay_samples);
    }
  }
  return profile_from_phoneme_delays(user_id, delays, pose, device, rate);
}

std::vector<PhonemeTemplate> assemble_template(const UserProfile& profile, std::span<const std::string> labels) {
  std::vector<PhonemeTemplate> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    const auto it = profile.phoneme_templates.find(label);
    if (it == profile.phoneme_templates.end())
      throw UnknownPhonemeError("profile '" + profile.user_id + "' has no template for '" + label + "'");
    out.push_back(it->second);
  }
  return out;
}

TdoaDynamic normalize_dynamic(const TdoaDynamic& dynamic, const DeviceSpec& from, const DeviceSpec& to,
                              int target_rate) {
  from.validate();
  to.validate();
  if (target_rate == 0) target_rate = dynamic.sample_rate;
  if (dynamic.sample_rate <= 0 || target_rate <= 0) throw PreconditionError("sample rates must be positive");
  const double factor = (to.mic_spacing_m / from.mic_spacing_m) *
                        (static_cast<double>(target_rate) / static_cast<double>(dynamic.sample_rate));
  TdoaDynamic out = dynamic;
  out.device = to;
  out.sample_rate = target_rate;
  for (auto& m : out.measurements) {
    m.delay_samples *= factor;
    m.refined_delay *= factor;
  }
  return out;
}

std::vector<PhonemeTemplate> adapt_templates(std::span<const PhonemeTemplate> templates, const DevicePose& pose,
                                             const PoseChange& change, int sample_rate,
                                             const GeometryOptions& options) {
  std::vector<PhonemeTemplate> out(templates.begin(), templates.end());
  if (change.is_identity()) return out;
  constexpr double h = 0.5;  // samples
  for (auto& t : out) {
    const double centre = adapt_delay(t.mean_delay, pose, change, sample_rate, options);
    double slope = 1.0;
    try {
      const double up = adapt_delay(t.mean_delay + h, pose, change, sample_rate, options);
      const double down = adapt_delay(t.mean_delay - h, pose, change, sample_rate, options);
      slope = (up - down) / (2.0 * h);
    } catch (const NoSolutionError&) {
    }
    for (auto& d : t.trial_delays) {
      try {
        d = adapt_delay(d, pose, change, sample_rate, options);
      } catch (const NoSolutionError&) {
        d = centre + slope * (d - t.mean_delay);
      }
    }
    t.mean_delay = centre;
    t.std_delay *= std::abs(slope);
  }
  return out;
}

json profile_to_json(const UserProfile& profile) {
  json doc;
  doc["version"] = kProfileVersion;
  doc["user_id"] = profile.user_id;
  doc["mode"] = std::string(to_string(profile.mode));
  doc["sample_rate"] = profile.sample_rate;
  doc["device"] = {{"name", profile.device.name}, {"mic_spacing_m", profile.device.mic_spacing_m}};
  doc["pose"] = pose_to_json(profile.enrollment_pose);
  json templates = json::array();
  if (profile.mode == ProfileMode::TextDependent) {
    for (const auto& [id, list] : profile.passphrase_templates) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        json t = template_to_json(list[i]);
        t["passphrase"] = id;
        t["position"] = i;
        templates.push_back(std::move(t));
      }
    }
  } else {
    for (const auto& [_, t] : profile.phoneme_templates) templates.push_back(template_to_json(t));
  }
  doc["templates"] = std::move(templates);
  return doc;
}

UserProfile profile_from_json(const json& doc) {
  try {
    if (!doc.contains("version") || doc.at("version").get<int>() != kProfileVersion)
      throw SchemaError("unsupported profile version " + (doc.contains("version") ? doc.at("version").dump() : "(none)"));
    UserProfile p;
    p.user_id = doc.at("user_id").get<std::string>();
    p.mode = parse_profile_mode(doc.at("mode").get<std::string>());
    p.sample_rate = doc.at("sample_rate").get<int>();
    p.device.mic_spacing_m = doc.at("device").at("mic_spacing_m").get<double>();
    p.device.name = doc.at("device").value("name", std::string("generic"));
    p.enrollment_pose = pose_from_json(doc.at("pose"));
    p.enrollment_pose.validate();
    p.device.validate();
    for (const auto& j : doc.at("templates")) {
      auto t = template_from_json(j);
      if (p.mode == ProfileMode::TextDependent) {
        auto& list = p.passphrase_templates[j.at("passphrase").get<std::string>()];
        const auto pos = j.at("position").get<std::size_t>();
        if (pos != list.size()) throw SchemaError("passphrase template positions are not contiguous");
        list.push_back(std::move(t));
      } else {
        const std::string label = t.label;
        if (!p.phoneme_templates.emplace(label, std::move(t)).second)
          throw SchemaError("duplicate template for '" + label + "'");
      }
    }
    if (p.mode == ProfileMode::TextDependent && p.passphrase_templates.empty())
      throw SchemaError("text-dependent profile has no passphrase");
    if (p.mode == ProfileMode::TextIndependent &&
        p.phoneme_templates.size() != PhonemeInventory::english().size())
      throw SchemaError("text-independent profile must cover the whole inventory");
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed profile: ") + e.what());
  } catch (const UnknownPhonemeError& e) {
    throw SchemaError(std::string("profile: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == "SchemaError") throw;
    throw SchemaError(std::string("profile: ") + e.what());
  }
}

void save_profile(const UserProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write profile " + path.string());
  out << profile_to_json(profile).dump(2) << '\n';
  if (!out) throw IoError("failed writing profile " + path.string());
}

UserProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open profile " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("profile is not valid JSON: " + std::string(e.what()));
  }
  return profile_from_json(doc);
}

std::vector<double> class_group_std(const UserProfile& profile, std::span<const PhonemeTemplate> templates) {
  if (profile.phoneme_templates.empty()) throw PreconditionError("profile has no per-phoneme templates");
  const auto& inventory = PhonemeInventory::english();
  std::map<ArticulationClass, std::pair<double, int>> acc;
  for (const auto& [label, t] : profile.phoneme_templates) {
    auto& [sum, n] = acc[inventory.at(label).articulation];
    sum += t.std_delay;
    ++n;
  }
  std::vector<double> out;
  for (const auto& t : templates) {
    const auto& [sum, n] = acc[inventory.at(t.label).articulation];
    out.push_back(sum / n);
  }
  return out;
}

}  // namespace tdl
