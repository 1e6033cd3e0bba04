// Copyright 2026 The tonetier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// IPA symbols, inventories and knowledge-based phone similarity.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tonetier {

enum class Category : std::uint8_t {
  consonant,
  vowel,
  tone_letter,
  voice_quality,
  marker,
};

std::string_view to_string(Category c);

// One element of a vowel's tone description. Pitch targets are the five Chao
// levels; glottal/breathy entries are the voice-quality marks that some tone
// descriptions carry between or after pitch targets; neutral and boundary only
// occur on tone tiers.
struct ToneTarget {
  enum class Kind : std::uint8_t { pitch, neutral, boundary, glottal, breathy };

  Kind kind = Kind::neutral;
  int level = 0;  // 11, 22, 33, 44 or 55 when kind == pitch

  static ToneTarget pitch(int level);  // throws unless level is a Chao level
  static ToneTarget from_digit(int digit);  // 1..5
  static ToneTarget neutral() { return {Kind::neutral, 0}; }
  static ToneTarget boundary() { return {Kind::boundary, 0}; }
  static ToneTarget glottal() { return {Kind::glottal, 0}; }
  static ToneTarget breathy() { return {Kind::breathy, 0}; }

  bool is_pitch() const { return kind == Kind::pitch; }
  bool is_voice_mark() const {
    return kind == Kind::glottal || kind == Kind::breathy;
  }
  int digit() const { return level / 11; }  // 1..5 for pitch targets

  // ˥ ˦ ˧ ˨ ˩, ʔ, h, <neutral>, <boundary>
  std::string render() const;

  friend bool operator==(const ToneTarget&, const ToneTarget&) = default;
  friend auto operator<=>(const ToneTarget&, const ToneTarget&) = default;
};

// Chao tone letter for a pitch level (55 -> ˥ ... 11 -> ˩).
std::string tone_letter(int level);
std::optional<ToneTarget> parse_tone_target(std::string_view rendered);

inline constexpr std::string_view kNeutral = "<neutral>";
inline constexpr std::string_view kBoundary = "<boundary>";
inline constexpr std::string_view kModal = "<modal>";
inline constexpr std::string_view kBlank = "<blank>";

struct IpaSymbol {
  std::string base;
  std::vector<std::string> diacritics;
  std::vector<ToneTarget> tone_targets;
  Category category = Category::consonant;

  // base + diacritics, without tones
  std::string segment() const;
  // segment followed by the tone description in IPA tone letters
  std::string render() const;

  bool has_pitch() const;

  friend bool operator==(const IpaSymbol&, const IpaSymbol&) = default;
};

using Syllable = std::vector<IpaSymbol>;
using SyllabifiedTranscript = std::vector<Syllable>;

struct ConsonantFeatures {
  double place = 0;
  double manner = 0;
  int voicing = 0;
  int aspiration = 0;
  int length = 0;
};

struct VowelQuality {
  double height = 0;
  double backness = 0;
  int rounding = 0;
};

// Monophthongs have onset == offset.
struct VowelFeatures {
  VowelQuality onset;
  VowelQuality offset;
  int length = 0;
  int aspiration = 0;
};

using PhoneFeatureVector = std::variant<ConsonantFeatures, VowelFeatures>;

struct DistanceWeights {
  double place = 2;
  double manner = 2;
  double voicing = 1;
  double aspiration = 1;
  double height = 2;
  double backness = 2;
  double rounding = 1;
  double length = 1;

  // key=value lines; unknown keys are a config error.
  static DistanceWeights parse(std::string_view text);
};

// The universal feature table: every glyph the toolkit knows, its category
// and its articulatory features.
class PhoneTable {
 public:
  enum class DiacriticRole : std::uint8_t { length, aspiration };

  static PhoneTable parse(std::string_view tsv);
  static const PhoneTable& builtin();

  bool has_base(std::string_view glyph) const;
  bool is_diacritic(std::string_view glyph) const;
  std::optional<int> tone_level(std::string_view glyph) const;
  Category category(std::string_view base) const;

  // Features of a bare segment (tones ignored). Throws UnknownSymbol.
  PhoneFeatureVector features(const IpaSymbol& sym) const;

  // All glyphs usable by a tokenizer: bases, diacritics, tone letters.
  std::vector<std::string> glyphs() const;
  std::vector<std::string> bases() const;

 private:
  struct BaseEntry {
    Category category;
    ConsonantFeatures consonant;
    VowelFeatures vowel;
  };
  std::map<std::string, BaseEntry, std::less<>> bases_;
  std::map<std::string, DiacriticRole, std::less<>> diacritics_;
  std::map<std::string, int, std::less<>> tones_;
};

// A per-language symbol inventory. Entries are segments (base plus optional
// diacritics) or tone letters drawn from the universal table.
class Inventory {
 public:
  // The unrestricted inventory: every base with any diacritics.
  static Inventory universal(const PhoneTable& table = PhoneTable::builtin());
  static Inventory parse(std::string_view text,
                         const PhoneTable& table = PhoneTable::builtin());
  static Inventory builtin(std::string_view lang);
  static std::vector<std::string> builtin_languages();

  const PhoneTable& table() const { return *table_; }
  const std::set<std::string, std::less<>>& glyphs() const { return glyphs_; }
  const std::set<std::string, std::less<>>& segments() const {
    return segments_;
  }
  bool allows_segment(std::string_view segment) const;

 private:
  const PhoneTable* table_ = nullptr;
  bool unrestricted_ = false;
  std::set<std::string, std::less<>> glyphs_;
  std::set<std::string, std::less<>> segments_;
};

// Splits a `.`-delimited IPA string into syllables of typed symbols by
// longest match over the inventory's glyphs. Tone letters directly after a
// vowel (or after its diacritics or earlier tone letters) fold into that
// vowel; ʔ/h directly after a folded tone letter fold too.
SyllabifiedTranscript tokenize_ipa(std::string_view text,
                                   const Inventory& inventory);
SyllabifiedTranscript tokenize_ipa(std::string_view text);

std::string render(const SyllabifiedTranscript& syllables);

// Weighted L1 over the feature vectors; diphthongs average onset and offset
// terms. Voice-quality segments compare as consonants.
double phone_distance(const IpaSymbol& a, const IpaSymbol& b,
                      const DistanceWeights& weights = {},
                      const PhoneTable& table = PhoneTable::builtin());

// True when a and b share a base and their diacritics differ by exactly one
// insertion or removal.
bool differs_by_one_diacritic(const IpaSymbol& a, const IpaSymbol& b);

enum class MatchKind : std::uint8_t { exact, diacritic, feature };

struct PhoneMatch {
  IpaSymbol symbol;
  MatchKind kind;
  double distance;
};

PhoneMatch nearest_phone_match(const IpaSymbol& k,
                               std::span<const IpaSymbol> candidates,
                               const DistanceWeights& weights = {},
                               const PhoneTable& table = PhoneTable::builtin());

IpaSymbol nearest_phone(const IpaSymbol& k,
                        std::span<const IpaSymbol> candidates,
                        const DistanceWeights& weights = {},
                        const PhoneTable& table = PhoneTable::builtin());

// Parses one rendered segment such as "aː" or "tɕʰ" (no tones).
IpaSymbol parse_segment(std::string_view text,
                        const PhoneTable& table = PhoneTable::builtin());

}  // namespace tonetier
