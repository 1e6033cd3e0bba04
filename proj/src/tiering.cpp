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

#include "tonetier/tiering.hpp"

#include <algorithm>

#include "text_util.hpp"
#include "tonetier/error.hpp"

namespace tonetier {

std::string_view to_string(TierId t) {
  switch (t) {
    case TierId::joint: return "joint";
    case TierId::phone: return "phone";
    case TierId::tone: return "tone";
    case TierId::voice: return "voice";
  }
  return "?";
}

TierId parse_tier_id(std::string_view s) {
  if (s == "joint") return TierId::joint;
  if (s == "phone") return TierId::phone;
  if (s == "tone") return TierId::tone;
  if (s == "voice") return TierId::voice;
  fail(ErrorCode::config_error, "unknown tier '" + std::string(s) + "'");
}

ModelVariant::ModelVariant(int id) : id_(id) {
  switch (id) {
    case 1: tiers_ = {TierId::joint}; break;
    case 2: tiers_ = {TierId::phone, TierId::tone}; break;
    case 3: tiers_ = {TierId::joint, TierId::phone, TierId::tone}; break;
    case 4:
      tiers_ = {TierId::joint, TierId::phone, TierId::tone, TierId::voice};
      break;
    default:
      fail(ErrorCode::config_error,
           "model variant must be 1-4, got " + std::to_string(id));
  }
}

bool ModelVariant::has(TierId t) const {
  return std::find(tiers_.begin(), tiers_.end(), t) != tiers_.end();
}

// ---------------------------------------------------------------------------
// TierAlphabet

TierAlphabet::TierAlphabet(TierId tier, std::string lang,
                           std::vector<std::string> symbols)
    : tier_(tier), lang_(std::move(lang)), symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == kBlank) {
      fail(ErrorCode::format_error, "blank may only appear at index 0");
    }
    if (!index_.emplace(symbols_[i], static_cast<int>(i + 1)).second) {
      fail(ErrorCode::format_error, "duplicate alphabet symbol '" + symbols_[i] + "'");
    }
  }
}

int TierAlphabet::index_of(std::string_view symbol) const {
  if (symbol == kBlank) return 0;
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

const std::string& TierAlphabet::symbol(int index) const {
  static const std::string blank(kBlank);
  if (index == 0) return blank;
  if (index < 0 || index > static_cast<int>(symbols_.size())) {
    fail(ErrorCode::unknown_label, "label " + std::to_string(index) +
                                       " outside alphabet of size " +
                                       std::to_string(size()));
  }
  return symbols_[static_cast<std::size_t>(index - 1)];
}

std::vector<int> TierAlphabet::encode(std::span<const std::string> symbols) const {
  std::vector<int> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) {
    int idx = index_of(s);
    if (idx <= 0) {
      fail(ErrorCode::unknown_label,
           "'" + s + "' is not in the " + std::string(to_string(tier_)) +
               " alphabet of '" + lang_ + "'");
    }
    out.push_back(idx);
  }
  return out;
}

std::vector<std::string> TierAlphabet::decode(std::span<const int> labels) const {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(symbol(l));
  return out;
}

std::string TierAlphabet::serialize() const {
  std::string out(kBlank);
  out += '\n';
  for (const auto& s : symbols_) {
    out += s;
    out += '\n';
  }
  return out;
}

TierAlphabet TierAlphabet::parse(std::string_view text, TierId tier,
                                 std::string lang) {
  auto lines = detail::content_lines(text);
  if (lines.empty() || lines.front() != kBlank) {
    fail(ErrorCode::format_error, "alphabet file must start with <blank>");
  }
  lines.erase(lines.begin());
  return TierAlphabet(tier, std::move(lang), std::move(lines));
}

const TierAlphabet& tone_alphabet(ToneMode mode) {
  static const TierAlphabet models23(
      TierId::tone, "universal",
      {"˥", "˦", "˧", "˨", "˩", std::string(kNeutral), std::string(kBoundary),
       "ʔ", "h"});
  static const TierAlphabet model4(
      TierId::tone, "universal",
      {"˩", "˨", "˧", "˥", std::string(kNeutral), std::string(kBoundary)});
  return mode == ToneMode::model4 ? model4 : models23;
}

const TierAlphabet& voice_alphabet() {
  static const TierAlphabet voice(
      TierId::voice, "universal",
      {"ʔ", "h", std::string(kBoundary), std::string(kModal)});
  return voice;
}

// ---------------------------------------------------------------------------
// Joint symbols

std::string joint_symbol(const IpaSymbol& sym) {
  std::string out = sym.segment();
  for (const auto& t : sym.tone_targets) {
    if (t.is_pitch()) {
      out += static_cast<char>('0' + t.digit());
    } else if (t.is_voice_mark()) {
      out += t.render();
    }
  }
  return out;
}

JointParts split_joint_symbol(std::string_view symbol) {
  auto first_digit = symbol.find_first_of("12345");
  if (first_digit == std::string_view::npos || first_digit == 0) {
    return {std::string(symbol), {}};
  }
  JointParts parts{std::string(symbol.substr(0, first_digit)), {}};
  std::size_t pos = first_digit;
  while (pos < symbol.size()) {
    char c = symbol[pos];
    if (c >= '1' && c <= '5') {
      parts.tones.push_back(ToneTarget::from_digit(c - '0'));
      ++pos;
    } else if (symbol.substr(pos, 1) == "h") {
      parts.tones.push_back(ToneTarget::breathy());
      ++pos;
    } else if (symbol.substr(pos, 2) == "ʔ") {
      parts.tones.push_back(ToneTarget::glottal());
      pos += 2;
    } else {
      fail(ErrorCode::unknown_label,
           "malformed joint symbol '" + std::string(symbol) + "'");
    }
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Tier builders

namespace {

std::vector<ToneTarget> syllable_tones(const Syllable& syllable) {
  std::vector<ToneTarget> out;
  for (const auto& sym : syllable) {
    out.insert(out.end(), sym.tone_targets.begin(), sym.tone_targets.end());
  }
  return out;
}

bool has_pitch(std::span<const ToneTarget> targets) {
  return std::any_of(targets.begin(), targets.end(),
                     [](const ToneTarget& t) { return t.is_pitch(); });
}

std::string syllable_voice(const Syllable& syllable, bool segmental) {
  auto tones = syllable_tones(syllable);
  std::string voice = normalize_tone_m4(tones).voice;
  if (!segmental) return voice;
  for (const auto& sym : syllable) {
    if (sym.category != Category::voice_quality) continue;
    if (voice == kModal) {
      voice = sym.base;
    } else if (voice != sym.base) {
      fail(ErrorCode::more_than_one_voice_mark,
           "syllable '" + render(SyllabifiedTranscript{syllable}) +
               "' carries both ʔ and h");
    }
  }
  return voice;
}

}  // namespace

TierTranscript build_joint_tier(const SyllabifiedTranscript& syllables,
                                std::string lang) {
  TierTranscript out{TierId::joint, std::move(lang), {}};
  for (const auto& syl : syllables) {
    for (const auto& sym : syl) out.symbols.push_back(joint_symbol(sym));
  }
  return out;
}

TierTranscript build_phone_tier(const SyllabifiedTranscript& syllables,
                                std::string lang, bool drop_segmental_voice) {
  TierTranscript out{TierId::phone, std::move(lang), {}};
  for (const auto& syl : syllables) {
    for (const auto& sym : syl) {
      if (drop_segmental_voice && sym.category == Category::voice_quality) {
        continue;
      }
      out.symbols.push_back(sym.segment());
    }
  }
  return out;
}

NormalizedTone normalize_tone_m4(std::span<const ToneTarget> targets) {
  std::vector<ToneTarget> pitch;
  std::string voice(kModal);
  for (const auto& t : targets) {
    if (t.is_pitch()) {
      pitch.push_back(t);
    } else if (t.is_voice_mark()) {
      std::string mark = t.render();
      if (voice != kModal && voice != mark) {
        fail(ErrorCode::more_than_one_voice_mark,
             "tone carries both ʔ and h");
      }
      voice = mark;
    }
  }
  NormalizedTone out{{ToneTarget::neutral(), ToneTarget::neutral()}, voice};
  if (pitch.size() == 1) {
    out.targets = {pitch[0], pitch[0]};
  } else if (pitch.size() >= 2) {
    out.targets = {pitch[0], pitch[1]};
  }
  // The normalized alphabet has no ˦; it is folded into ˥.
  for (auto& t : out.targets) {
    if (t.is_pitch() && t.level == 44) t = ToneTarget::pitch(55);
  }
  return out;
}

TierTranscript build_tone_tier(const SyllabifiedTranscript& syllables,
                               ToneMode mode, std::string lang) {
  TierTranscript out{TierId::tone, std::move(lang), {}};
  const std::string boundary(kBoundary);
  for (const auto& syl : syllables) {
    auto tones = syllable_tones(syl);
    if (mode == ToneMode::model4) {
      auto norm = normalize_tone_m4(tones);
      for (const auto& t : norm.targets) out.symbols.push_back(t.render());
    } else if (!has_pitch(tones)) {
      out.symbols.emplace_back(kNeutral);
    } else {
      for (const auto& t : tones) out.symbols.push_back(t.render());
    }
    out.symbols.push_back(boundary);
  }
  return out;
}

TierTranscript build_voice_tier(const SyllabifiedTranscript& syllables,
                                std::string lang,
                                bool segmental_voice_quality) {
  TierTranscript out{TierId::voice, std::move(lang), {}};
  for (const auto& syl : syllables) {
    out.symbols.push_back(syllable_voice(syl, segmental_voice_quality));
    out.symbols.emplace_back(kBoundary);
  }
  return out;
}

std::map<TierId, TierTranscript> build_tiers(
    const SyllabifiedTranscript& syllables, const std::string& lang,
    const ModelVariant& variant, const TieringOptions& options) {
  std::map<TierId, TierTranscript> out;
  const bool segmental = options.segmental_voice(lang);
  for (TierId t : variant.tiers()) {
    switch (t) {
      case TierId::joint:
        out[t] = build_joint_tier(syllables, lang);
        break;
      case TierId::phone:
        out[t] = build_phone_tier(syllables, lang,
                                  variant.id() == 4 && segmental);
        break;
      case TierId::tone:
        out[t] = build_tone_tier(syllables, variant.tone_mode(), lang);
        break;
      case TierId::voice:
        out[t] = build_voice_tier(syllables, lang, segmental);
        break;
    }
  }
  return out;
}

AlphabetSet build_alphabets(std::span<const TokenizedUtterance> corpus,
                            const ModelVariant& variant,
                            const TieringOptions& options,
                            std::span<const std::string> languages) {
  std::set<std::string> langs(languages.begin(), languages.end());
  for (const auto& u : corpus) langs.insert(u.lang);

  std::map<AlphabetKey, std::set<std::string>> seen;
  for (const auto& lang : langs) {
    for (TierId t : variant.tiers()) seen[{lang, t}];
  }
  for (const auto& u : corpus) {
    for (auto& [tier, tr] : build_tiers(u.syllables, u.lang, variant, options)) {
      if (tier == TierId::tone || tier == TierId::voice) continue;
      seen[{u.lang, tier}].insert(tr.symbols.begin(), tr.symbols.end());
    }
  }

  AlphabetSet out;
  for (auto& [key, symbols] : seen) {
    const auto& [lang, tier] = key;
    if (tier == TierId::tone || tier == TierId::voice) {
      const TierAlphabet& fixed = tier == TierId::tone
                                      ? tone_alphabet(variant.tone_mode())
                                      : voice_alphabet();
      out.emplace(key, TierAlphabet(tier, lang, fixed.symbols()));
    } else {
      out.emplace(key, TierAlphabet(tier, lang, {symbols.begin(), symbols.end()}));
    }
  }
  return out;
}

std::string format_tier_line(std::string_view utt_id,
                             std::span<const std::string> symbols) {
  std::string out(utt_id);
  out += '\t';
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i > 0) out += ' ';
    out += symbols[i];
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_tier_file(
    std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& line : detail::split(text, '\n')) {
    if (detail::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorCode::format_error, "tier line without a tab: '" + line + "'");
    }
    out.emplace_back(line.substr(0, tab), detail::split_ws(line.substr(tab + 1)));
  }
  return out;
}

}  // namespace tonetier
