#include "tdl/phonemes.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "tdl/errors.hpp"

namespace tdl {
namespace {

using AC = ArticulationClass;

constexpr std::array<PhonemeInfo, 44> kEnglish{{
    // vowels (19)
    {"AA", AC::Vowel}, {"AE", AC::Vowel}, {"AH", AC::Vowel}, {"AO", AC::Vowel},
    {"AW", AC::Vowel}, {"AX", AC::Vowel}, {"AXR", AC::Vowel}, {"AY", AC::Vowel},
    {"EH", AC::Vowel}, {"ER", AC::Vowel}, {"EY", AC::Vowel}, {"IH", AC::Vowel},
    {"IX", AC::Vowel}, {"IY", AC::Vowel}, {"OW", AC::Vowel}, {"OY", AC::Vowel},
    {"UH", AC::Vowel}, {"UW", AC::Vowel}, {"UX", AC::Vowel},
    // consonants (25)
    {"B", AC::VoicedStop}, {"D", AC::VoicedStop}, {"G", AC::VoicedStop},
    {"P", AC::VoicelessStop}, {"T", AC::VoicelessStop}, {"K", AC::VoicelessStop},
    {"M", AC::Nasal}, {"N", AC::Nasal}, {"NG", AC::Nasal},
    {"V", AC::VoicedFricative}, {"DH", AC::VoicedFricative}, {"Z", AC::VoicedFricative},
    {"ZH", AC::VoicedFricative},
    {"F", AC::VoicelessFricative}, {"TH", AC::VoicelessFricative}, {"S", AC::VoicelessFricative},
    {"SH", AC::VoicelessFricative},
    {"CH", AC::Affricate}, {"JH", AC::Affricate},
    {"L", AC::Lateral},
    {"R", AC::Approximant}, {"W", AC::Approximant}, {"Y", AC::Approximant}, {"WH", AC::Approximant},
    {"HH", AC::Aspirate},
}};

}  // namespace

std::string_view to_string(ArticulationClass c) noexcept {
  switch (c) {
    case AC::Vowel: return "vowel";
    case AC::Nasal: return "nasal";
    case AC::VoicedStop: return "voiced_stop";
    case AC::VoicelessStop: return "voiceless_stop";
    case AC::VoicedFricative: return "voiced_fricative";
    case AC::VoicelessFricative: return "voiceless_fricative";
    case AC::Affricate: return "affricate";
    case AC::Approximant: return "approximant";
    case AC::Lateral: return "lateral";
    case AC::Aspirate: return "aspirate";
  }
  return "unknown";
}

bool is_voiced(ArticulationClass c) noexcept {
  return c != AC::VoicelessStop && c != AC::VoicelessFricative && c != AC::Aspirate;
}

const PhonemeInventory& PhonemeInventory::english() {
  static const PhonemeInventory inventory;
  return inventory;
}

std::span<const PhonemeInfo> PhonemeInventory::symbols() const noexcept { return kEnglish; }

std::optional<PhonemeInfo> PhonemeInventory::find(std::string_view symbol) const noexcept {
  auto it = std::find_if(kEnglish.begin(), kEnglish.end(),
                         [&](const PhonemeInfo& p) { return p.symbol == symbol; });
  if (it == kEnglish.end()) return std::nullopt;
  return *it;
}

const PhonemeInfo& PhonemeInventory::at(std::string_view symbol) const {
  auto it = std::find_if(kEnglish.begin(), kEnglish.end(),
                         [&](const PhonemeInfo& p) { return p.symbol == symbol; });
  if (it == kEnglish.end()) throw UnknownPhonemeError("unknown phoneme '" + std::string(symbol) + "'");
  return *it;
}

}  // namespace tdl
