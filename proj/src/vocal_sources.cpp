#include <algorithm>
#include <cmath>
#include <fstream>

#include "tdl/errors.hpp"
#include "tdl/simulator.hpp"

namespace tdl {
namespace {

using AC = ArticulationClass;

// Vowels follow the height/backness chart: front vowels sit near the lips
// (z ~ 0), back vowels deeper in the oral cavity, height moves y by a few mm.
// Consonants are placed by place of articulation along z; nasals radiate from
// the nostrils above the mouth. Delays noted at the reference pose, 192 kHz.
std::vector<VocalSource> default_table() {
  return {
      {"IY", AC::Vowel, +0.0040, +0.0091, 0.87},          // 63.5
      {"IH", AC::Vowel, +0.0020, -0.0005, 1.2},           // 61.3
      {"EY", AC::Vowel, +0.0005, +0.0010, 1.05},          // 63.0
      {"EH", AC::Vowel, -0.0015, -0.0039, 1.42},          // 62.4
      {"AE", AC::Vowel, -0.0045, -0.0060, 1.65},          // 63.5
      {"AA", AC::Vowel, -0.0060, -0.0456, 1.5},           // 50.1
      {"AO", AC::Vowel, -0.0025, -0.0457, 1.8},           // 48.2
      {"OW", AC::Vowel, +0.0000, -0.0392, 1.35},          // 48.7
      {"UH", AC::Vowel, +0.0020, -0.0286, 2.09},          // 50.9
      {"UW", AC::Vowel, +0.0040, -0.0352, 1.12},          // 47.5
      {"AH", AC::Vowel, -0.0020, -0.0253, 1.58},          // 54.5
      {"ER", AC::Vowel, -0.0010, -0.0194, 1.72},          // 56.0
      {"AX", AC::Vowel, -0.0010, -0.0216, 1.95},          // 55.2
      {"AXR", AC::Vowel, -0.0015, -0.0202, 1.88},         // 56.0
      {"IX", AC::Vowel, +0.0025, -0.0120, 1.42},          // 56.4
      {"UX", AC::Vowel, +0.0030, -0.0177, 1.5},           // 54.0
      {"AY", AC::Vowel, -0.0040, -0.0193, 1.65},          // 57.9
      {"AW", AC::Vowel, -0.0045, -0.0335, 1.8},           // 53.1
      {"OY", AC::Vowel, -0.0010, -0.0357, 1.88},          // 50.4
      {"P", AC::VoicelessStop, 0.0, +0.0071, 6.0},        // 66.0
      {"B", AC::VoicedStop, 0.0, +0.0059, 0.8},           // 65.5
      {"M", AC::Nasal, +0.0949, 0.0, 2.5},                // -31.0
      {"F", AC::VoicelessFricative, 0.0, -0.0024, 1.1},   // 62.0
      {"V", AC::VoicedFricative, 0.0, -0.0036, 0.9},      // 61.5
      {"TH", AC::VoicelessFricative, 0.0, -0.0111, 1.2},  // 58.5
      {"DH", AC::VoicedFricative, 0.0, -0.0124, 1.0},     // 58.0
      {"T", AC::VoicelessStop, 0.0, -0.0232, 9.0},        // 54.0
      {"D", AC::VoicedStop, 0.0, -0.0246, 0.8},           // 53.5
      {"S", AC::VoicelessFricative, 0.0, -0.0275, 1.0},   // 52.5
      {"Z", AC::VoicedFricative, 0.0, -0.0290, 0.9},      // 52.0
      {"N", AC::Nasal, +0.0929, 0.0, 2.4},                // -29.0
      {"L", AC::Lateral, 0.0, -0.0320, 1.1},              // 51.0
      {"R", AC::Approximant, 0.0, -0.0449, 1.2},          // 47.0
      {"SH", AC::VoicelessFricative, 0.0, -0.0556, 1.1},  // 44.0
      {"ZH", AC::VoicedFricative, 0.0, -0.0575, 1.0},     // 43.5
      {"CH", AC::Affricate, 0.0, -0.0519, 1.2},           // 45.0
      {"JH", AC::Affricate, 0.0, -0.0537, 1.0},           // 44.5
      {"Y", AC::Approximant, 0.0, -0.0675, 0.9},          // 41.0
      {"K", AC::VoicelessStop, 0.0, -0.0881, 20.0},       // 36.5
      {"G", AC::VoicedStop, 0.0, -0.0907, 0.8},           // 36.0
      {"NG", AC::Nasal, +0.0910, 0.0, 2.0},               // -27.0
      {"W", AC::Approximant, 0.0, +0.0024, 0.9},          // 64.0
      {"WH", AC::Approximant, 0.0, 0.0, 1.2},             // 63.0
      {"HH", AC::Aspirate, 0.0, -0.0808, 1.1},            // 38.0
  };
}

}  // namespace

VocalSourceModel::VocalSourceModel(std::vector<VocalSource> sources) : sources_(std::move(sources)) { validate(); }

const VocalSourceModel& VocalSourceModel::default_model() {
  static const VocalSourceModel model(default_table());
  return model;
}

void VocalSourceModel::validate() const {
  const auto& inventory = PhonemeInventory::english();
  for (const auto& s : sources_) {
    const auto& info = inventory.at(s.label);
    if (info.articulation != s.articulation)
      throw SchemaError("articulation of '" + s.label + "' disagrees with the inventory");
    if (std::hypot(s.dy, s.dz) > kVocalRegionRadius + 1e-12)
      throw SchemaError("source '" + s.label + "' lies outside the vocal region");
    if (!(s.jitter_samples > 0.0)) throw SchemaError("source '" + s.label + "' needs a positive jitter");
  }
  for (std::size_t i = 0; i < sources_.size(); ++i)
    for (std::size_t j = i + 1; j < sources_.size(); ++j)
      if (sources_[i].label == sources_[j].label) throw SchemaError("duplicate source '" + sources_[i].label + "'");
}

const VocalSource& VocalSourceModel::at(const std::string& label) const {
  for (const auto& s : sources_)
    if (s.label == label) return s;
  PhonemeInventory::english().at(label);
  throw UnknownPhonemeError("vocal source model has no entry for '" + label + "'");
}

VocalSourceModel VocalSourceModel::for_user(std::uint64_t user_seed) const {
  Rng rng(derive_seed(user_seed, 0x5eedu));
  const double scale = rng.uniform(0.9, 1.1);
  const double ty = rng.uniform(-0.005, 0.005);
  const double tz = rng.uniform(-0.005, 0.005);
  auto sources = sources_;
  for (auto& s : sources) {
    s.dy = s.dy * scale + ty;
    s.dz = s.dz * scale + tz;
    const double r = std::hypot(s.dy, s.dz);
    if (r > kVocalRegionRadius) {
      s.dy *= kVocalRegionRadius / r;
      s.dz *= kVocalRegionRadius / r;
    }
  }
  return VocalSourceModel(std::move(sources));
}

double VocalSourceModel::vertical_jitter_m(const VocalSource& source) const {
  const auto pose = DevicePose::reference();
  constexpr double h = 1e-6;
  const double up = pose_to_tdoa(pose, {source.dy + h, source.dz}, kJitterReferenceRate);
  const double down = pose_to_tdoa(pose, {source.dy - h, source.dz}, kJitterReferenceRate);
  const double slope = std::max(std::abs(up - down) / (2.0 * h), 1.0);
  return source.jitter_samples / slope;
}

nlohmann::json VocalSourceModel::to_json() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["units"] = {{"offset", "m"}, {"jitter", "samples@192000"}};
  doc["sources"] = nlohmann::json::array();
  for (const auto& s : sources_)
    doc["sources"].push_back({{"phoneme", s.label},
                              {"class", std::string(to_string(s.articulation))},
                              {"dy", s.dy},
                              {"dz", s.dz},
                              {"jitter", s.jitter_samples}});
  return doc;
}

VocalSourceModel VocalSourceModel::from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("version", 1) != 1) throw SchemaError("unsupported vocal source version");
    std::vector<VocalSource> sources;
    const auto& inventory = PhonemeInventory::english();
    for (const auto& j : doc.at("sources")) {
      VocalSource s;
      s.label = j.at("phoneme").get<std::string>();
      s.articulation = inventory.at(s.label).articulation;
      if (j.contains("class") && j.at("class").get<std::string>() != to_string(s.articulation))
        throw SchemaError("class of '" + s.label + "' disagrees with the inventory");
      s.dy = j.at("dy").get<double>();
      s.dz = j.at("dz").get<double>();
      s.jitter_samples = j.at("jitter").get<double>();
      sources.push_back(std::move(s));
    }
    return VocalSourceModel(std::move(sources));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed vocal source table: ") + e.what());
  }
}

VocalSourceModel VocalSourceModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open vocal source table " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("vocal source table is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

}  // namespace tdl
