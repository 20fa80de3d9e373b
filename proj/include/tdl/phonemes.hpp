#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace tdl {

enum class ArticulationClass {
  Vowel,
  Nasal,
  VoicedStop,
  VoicelessStop,
  VoicedFricative,
  VoicelessFricative,
  Affricate,
  Approximant,
  Lateral,
  Aspirate,
};

std::string_view to_string(ArticulationClass c) noexcept;
bool is_voiced(ArticulationClass c) noexcept;

struct PhonemeInfo {
  std::string_view symbol;  // ARPAbet, upper case
  ArticulationClass articulation;
  bool is_vowel() const noexcept { return articulation == ArticulationClass::Vowel; }
};

// Label used for segments that carry no phoneme identity (energy segmenter).
inline constexpr std::string_view kUnlabeled = "?";

// The 44-symbol English inventory: the 39 CMU ARPAbet phonemes plus AX, AXR,
// IX, UX (reduced vowels) and WH (voiceless labio-velar approximant).
class PhonemeInventory {
 public:
  static const PhonemeInventory& english();

  std::span<const PhonemeInfo> symbols() const noexcept;
  std::size_t size() const noexcept { return symbols().size(); }
  std::optional<PhonemeInfo> find(std::string_view symbol) const noexcept;
  bool contains(std::string_view symbol) const noexcept { return find(symbol).has_value(); }
  // Throws UnknownPhonemeError.
  const PhonemeInfo& at(std::string_view symbol) const;
};

}  // namespace tdl
