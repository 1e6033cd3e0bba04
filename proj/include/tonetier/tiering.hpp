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

// Tier transcripts and alphabets for the four output-tier configurations.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tonetier/ipa.hpp"

namespace tonetier {

enum class TierId : std::uint8_t { joint, phone, tone, voice };

std::string_view to_string(TierId t);
TierId parse_tier_id(std::string_view s);

enum class ToneMode : std::uint8_t { models23, model4 };

// Model 1: joint. Model 2: phone+tone. Model 3: joint+phone+tone.
// Model 4: joint+phone+tone+voice with normalized two-target tones.
class ModelVariant {
 public:
  explicit ModelVariant(int id);

  int id() const { return id_; }
  const std::vector<TierId>& tiers() const { return tiers_; }
  bool has(TierId t) const;
  ToneMode tone_mode() const {
    return id_ == 4 ? ToneMode::model4 : ToneMode::models23;
  }

  friend bool operator==(const ModelVariant& a, const ModelVariant& b) {
    return a.id_ == b.id_;
  }

 private:
  int id_;
  std::vector<TierId> tiers_;
};

// Ordered symbol inventory of one tier of one language; index 0 is blank.
class TierAlphabet {
 public:
  TierAlphabet() = default;
  TierAlphabet(TierId tier, std::string lang, std::vector<std::string> symbols);

  TierId tier() const { return tier_; }
  const std::string& lang() const { return lang_; }
  // Non-blank symbols; symbol k of the softmax is symbols()[k - 1].
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size() + 1; }

  // -1 when absent. The blank maps to 0.
  int index_of(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return index_of(symbol) > 0; }
  const std::string& symbol(int index) const;

  std::vector<int> encode(std::span<const std::string> symbols) const;
  std::vector<std::string> decode(std::span<const int> labels) const;

  // Alphabet file: `<blank>` on the first line then one symbol per line.
  std::string serialize() const;
  static TierAlphabet parse(std::string_view text, TierId tier,
                            std::string lang);

  friend bool operator==(const TierAlphabet& a, const TierAlphabet& b) {
    return a.tier_ == b.tier_ && a.lang_ == b.lang_ && a.symbols_ == b.symbols_;
  }

 private:
  TierId tier_ = TierId::joint;
  std::string lang_;
  std::vector<std::string> symbols_;
  std::map<std::string, int, std::less<>> index_;
};

const TierAlphabet& tone_alphabet(ToneMode mode);
const TierAlphabet& voice_alphabet();

struct TierTranscript {
  TierId tier = TierId::joint;
  std::string lang;
  std::vector<std::string> symbols;

  friend bool operator==(const TierTranscript&, const TierTranscript&) = default;
};

// Symbol sequences keyed by tier, for references and decoder output.
using TierHypotheses = std::map<TierId, std::vector<std::string>>;

struct TieringOptions {
  // Languages whose segmental ʔ/h move to the voice tier under model 4.
  std::set<std::string> segmental_voice_languages = {"lao"};

  bool segmental_voice(std::string_view lang) const {
    return segmental_voice_languages.count(std::string(lang)) > 0;
  }
};

// Joint-tier rendering: consonants bare, vowels with their tone description
// as Chao digits (ʔ/h kept in place), e.g. "a214", "a3ʔ5", "m".
std::string joint_symbol(const IpaSymbol& sym);

struct JointParts {
  std::string segment;
  std::vector<ToneTarget> tones;  // empty for bare symbols
};
JointParts split_joint_symbol(std::string_view symbol);

TierTranscript build_joint_tier(const SyllabifiedTranscript& syllables,
                                std::string lang);
TierTranscript build_phone_tier(const SyllabifiedTranscript& syllables,
                                std::string lang,
                                bool drop_segmental_voice = false);
TierTranscript build_tone_tier(const SyllabifiedTranscript& syllables,
                               ToneMode mode, std::string lang = {});

struct NormalizedTone {
  std::array<ToneTarget, 2> targets;
  std::string voice;  // "ʔ", "h" or "<modal>"
};

NormalizedTone normalize_tone_m4(std::span<const ToneTarget> targets);

TierTranscript build_voice_tier(const SyllabifiedTranscript& syllables,
                                std::string lang,
                                bool segmental_voice_quality);

std::map<TierId, TierTranscript> build_tiers(
    const SyllabifiedTranscript& syllables, const std::string& lang,
    const ModelVariant& variant, const TieringOptions& options = {});

struct TokenizedUtterance {
  std::string utt_id;
  std::string lang;
  SyllabifiedTranscript syllables;
};

using AlphabetKey = std::pair<std::string, TierId>;
using AlphabetSet = std::map<AlphabetKey, TierAlphabet>;

// Joint/phone alphabets hold exactly the symbols seen per language (sorted);
// tone/voice alphabets are the fixed universal sets. `languages` adds
// languages that may have no utterances.
AlphabetSet build_alphabets(std::span<const TokenizedUtterance> corpus,
                            const ModelVariant& variant,
                            const TieringOptions& options = {},
                            std::span<const std::string> languages = {});

// Tier transcript file: `utt_id<TAB>sym sym ...` per line.
std::string format_tier_line(std::string_view utt_id,
                             std::span<const std::string> symbols);
std::vector<std::pair<std::string, std::vector<std::string>>> parse_tier_file(
    std::string_view text);

}  // namespace tonetier
