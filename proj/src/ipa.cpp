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

#include "tonetier/ipa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "builtin_data.hpp"
#include "tonetier/error.hpp"
#include "text_util.hpp"

namespace tonetier {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::consonant: return "consonant";
    case Category::vowel: return "vowel";
    case Category::tone_letter: return "tone-letter";
    case Category::voice_quality: return "voice-quality";
    case Category::marker: return "marker";
  }
  return "?";
}

namespace {

constexpr std::string_view kToneLetters[] = {"˩", "˨", "˧", "˦", "˥"};

bool is_chao_level(int level) {
  return level == 11 || level == 22 || level == 33 || level == 44 ||
         level == 55;
}

}  // namespace

ToneTarget ToneTarget::pitch(int level) {
  if (!is_chao_level(level)) {
    fail(ErrorCode::unknown_symbol,
         "pitch level " + std::to_string(level) + " is not a Chao level");
  }
  return {Kind::pitch, level};
}

ToneTarget ToneTarget::from_digit(int digit) { return pitch(digit * 11); }

std::string tone_letter(int level) {
  if (!is_chao_level(level)) {
    fail(ErrorCode::unknown_symbol, "no tone letter for " + std::to_string(level));
  }
  return std::string(kToneLetters[level / 11 - 1]);
}

std::string ToneTarget::render() const {
  switch (kind) {
    case Kind::pitch: return tone_letter(level);
    case Kind::neutral: return std::string(kNeutral);
    case Kind::boundary: return std::string(kBoundary);
    case Kind::glottal: return "ʔ";
    case Kind::breathy: return "h";
  }
  return {};
}

std::optional<ToneTarget> parse_tone_target(std::string_view s) {
  for (int i = 0; i < 5; ++i) {
    if (s == kToneLetters[i]) return ToneTarget::from_digit(i + 1);
  }
  if (s == "ʔ") return ToneTarget::glottal();
  if (s == "h") return ToneTarget::breathy();
  if (s == kNeutral) return ToneTarget::neutral();
  if (s == kBoundary) return ToneTarget::boundary();
  return std::nullopt;
}

std::string IpaSymbol::segment() const {
  std::string out = base;
  for (const auto& d : diacritics) out += d;
  return out;
}

std::string IpaSymbol::render() const {
  std::string out = segment();
  for (const auto& t : tone_targets) out += t.render();
  return out;
}

bool IpaSymbol::has_pitch() const {
  return std::any_of(tone_targets.begin(), tone_targets.end(),
                     [](const ToneTarget& t) { return t.is_pitch(); });
}

// ---------------------------------------------------------------------------
// DistanceWeights

DistanceWeights DistanceWeights::parse(std::string_view text) {
  DistanceWeights w;
  const std::map<std::string, double*, std::less<>> fields = {
      {"place", &w.place},         {"manner", &w.manner},
      {"voicing", &w.voicing},     {"aspiration", &w.aspiration},
      {"height", &w.height},       {"backness", &w.backness},
      {"rounding", &w.rounding},   {"length", &w.length},
  };
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      fail(ErrorCode::config_error, "unknown distance weight '" + key + "'");
    }
    *it->second = detail::parse_double(value, key);
    if (*it->second < 0) {
      fail(ErrorCode::config_error, "negative distance weight '" + key + "'");
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// PhoneTable

PhoneTable PhoneTable::parse(std::string_view tsv) {
  PhoneTable table;
  std::vector<std::vector<std::string>> diphthongs;
  for (const auto& line : detail::content_lines(tsv)) {
    auto cols = detail::split(line, '\t');
    if (cols.size() < 2) {
      fail(ErrorCode::format_error, "phone table row '" + line + "'");
    }
    const std::string& glyph = cols[0];
    const std::string& kind = cols[1];
    auto num = [&](std::size_t i) {
      if (i >= cols.size()) {
        fail(ErrorCode::format_error, "phone table row '" + line + "' too short");
      }
      return detail::parse_double(cols[i], glyph);
    };
    if (kind == "consonant" || kind == "glottal") {
      BaseEntry e{kind == "glottal" ? Category::voice_quality
                                     : Category::consonant,
                  {}, {}};
      e.consonant.place = num(2);
      e.consonant.manner = num(3);
      e.consonant.voicing = static_cast<int>(num(4));
      table.bases_[glyph] = e;
    } else if (kind == "vowel") {
      BaseEntry e{Category::vowel, {}, {}};
      e.vowel.onset = {num(2), num(3), static_cast<int>(num(4))};
      e.vowel.offset = e.vowel.onset;
      table.bases_[glyph] = e;
    } else if (kind == "diphthong") {
      diphthongs.push_back(cols);
    } else if (kind == "diacritic") {
      if (cols.size() < 3) fail(ErrorCode::format_error, line);
      if (cols[2] == "length") {
        table.diacritics_[glyph] = DiacriticRole::length;
      } else if (cols[2] == "aspiration") {
        table.diacritics_[glyph] = DiacriticRole::aspiration;
      } else {
        fail(ErrorCode::format_error, "unknown diacritic role '" + cols[2] + "'");
      }
    } else if (kind == "tone") {
      int level = static_cast<int>(num(2));
      if (!is_chao_level(level)) {
        fail(ErrorCode::format_error, "tone level in row '" + line + "'");
      }
      table.tones_[glyph] = level;
    } else {
      fail(ErrorCode::format_error, "unknown phone class '" + kind + "'");
    }
  }
  for (const auto& cols : diphthongs) {
    if (cols.size() < 4) fail(ErrorCode::format_error, "diphthong " + cols[0]);
    auto onset = table.bases_.find(cols[2]);
    auto offset = table.bases_.find(cols[3]);
    if (onset == table.bases_.end() || offset == table.bases_.end() ||
        onset->second.category != Category::vowel ||
        offset->second.category != Category::vowel) {
      fail(ErrorCode::format_error, "diphthong " + cols[0] +
                                        " must name two table vowels");
    }
    BaseEntry e{Category::vowel, {}, {}};
    e.vowel.onset = onset->second.vowel.onset;
    e.vowel.offset = offset->second.vowel.onset;
    table.bases_[cols[0]] = e;
  }
  return table;
}

const PhoneTable& PhoneTable::builtin() {
  static const PhoneTable table = parse(detail::builtin_phone_table());
  return table;
}

bool PhoneTable::has_base(std::string_view glyph) const {
  return bases_.find(glyph) != bases_.end();
}

bool PhoneTable::is_diacritic(std::string_view glyph) const {
  return diacritics_.find(glyph) != diacritics_.end();
}

std::optional<int> PhoneTable::tone_level(std::string_view glyph) const {
  auto it = tones_.find(glyph);
  if (it == tones_.end()) return std::nullopt;
  return it->second;
}

Category PhoneTable::category(std::string_view base) const {
  if (auto it = bases_.find(base); it != bases_.end()) {
    return it->second.category;
  }
  if (tones_.find(base) != tones_.end()) return Category::tone_letter;
  if (base == kNeutral || base == kBoundary || base == kModal ||
      base == kBlank) {
    return Category::marker;
  }
  fail(ErrorCode::unknown_symbol, "'" + std::string(base) + "' is not in the phone table");
}

PhoneFeatureVector PhoneTable::features(const IpaSymbol& sym) const {
  auto it = bases_.find(sym.base);
  if (it == bases_.end()) {
    fail(ErrorCode::unknown_symbol, "no features for '" + sym.base + "'");
  }
  int length = 0;
  int aspiration = 0;
  for (const auto& d : sym.diacritics) {
    auto di = diacritics_.find(d);
    if (di == diacritics_.end()) {
      fail(ErrorCode::unknown_symbol, "diacritic '" + d + "'");
    }
    (di->second == DiacriticRole::length ? length : aspiration) += 1;
  }
  if (it->second.category == Category::vowel) {
    VowelFeatures v = it->second.vowel;
    v.length = length;
    v.aspiration = aspiration;
    return v;
  }
  ConsonantFeatures c = it->second.consonant;
  c.length = length;
  c.aspiration = aspiration;
  return c;
}

std::vector<std::string> PhoneTable::glyphs() const {
  std::vector<std::string> out = bases();
  for (const auto& [g, _] : diacritics_) out.push_back(g);
  for (const auto& [g, _] : tones_) out.push_back(g);
  return out;
}

std::vector<std::string> PhoneTable::bases() const {
  std::vector<std::string> out;
  for (const auto& [g, _] : bases_) out.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Inventory

Inventory Inventory::universal(const PhoneTable& table) {
  Inventory inv;
  inv.table_ = &table;
  inv.unrestricted_ = true;
  for (auto& g : table.glyphs()) inv.glyphs_.insert(std::move(g));
  for (auto& b : table.bases()) inv.segments_.insert(std::move(b));
  return inv;
}

Inventory Inventory::parse(std::string_view text, const PhoneTable& table) {
  Inventory inv;
  inv.table_ = &table;
  for (const auto& entry : detail::content_lines(text)) {
    if (table.tone_level(entry) || table.is_diacritic(entry)) {
      inv.glyphs_.insert(entry);
      continue;
    }
    IpaSymbol sym = parse_segment(entry, table);
    inv.glyphs_.insert(sym.base);
    for (const auto& d : sym.diacritics) inv.glyphs_.insert(d);
    inv.segments_.insert(sym.segment());
  }
  return inv;
}

Inventory Inventory::builtin(std::string_view lang) {
  auto text = detail::builtin_inventory(lang);
  if (text.empty()) {
    fail(ErrorCode::unknown_symbol, "no built-in inventory for '" + std::string(lang) + "'");
  }
  return parse(text);
}

std::vector<std::string> Inventory::builtin_languages() {
  std::vector<std::string> out;
  for (auto l : detail::builtin_inventory_languages()) out.emplace_back(l);
  return out;
}

bool Inventory::allows_segment(std::string_view segment) const {
  if (unrestricted_) return true;
  return segments_.find(segment) != segments_.end();
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

class Tokenizer {
 public:
  explicit Tokenizer(const Inventory& inventory) : inv_(inventory) {
    for (const auto& g : inv_.glyphs()) {
      max_glyph_ = std::max(max_glyph_, g.size());
    }
  }

  SyllabifiedTranscript run(std::string_view text) {
    SyllabifiedTranscript out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      if (text[pos] == '.') {
        close_syllable(out, pos);
        ++pos;
        continue;
      }
      std::string_view glyph = match(text, pos);
      if (glyph.empty()) {
        fail(ErrorCode::unknown_symbol,
             "unknown glyph at byte " + std::to_string(pos) + " of '" +
                 std::string(text) + "'");
      }
      consume(glyph, pos);
      pos += glyph.size();
    }
    close_syllable(out, text.size());
    return out;
  }

 private:
  enum class Last { none, vowel, other, tone };

  std::string_view match(std::string_view text, std::size_t pos) const {
    std::size_t limit = std::min(max_glyph_, text.size() - pos);
    for (std::size_t len = limit; len > 0; --len) {
      auto candidate = text.substr(pos, len);
      if (inv_.glyphs().find(candidate) != inv_.glyphs().end()) {
        return candidate;
      }
    }
    return {};
  }

  void consume(std::string_view glyph, std::size_t pos) {
    const PhoneTable& table = inv_.table();
    if (auto level = table.tone_level(glyph)) {
      if (last_ != Last::vowel && last_ != Last::tone) {
        fail(ErrorCode::misplaced_tone,
             "tone letter at byte " + std::to_string(pos) +
                 " does not follow a vowel");
      }
      current_.back().tone_targets.push_back(ToneTarget::pitch(*level));
      last_ = Last::tone;
      return;
    }
    if (table.is_diacritic(glyph)) {
      if (last_ != Last::vowel && last_ != Last::other) {
        fail(ErrorCode::unknown_symbol,
             "diacritic without a base at byte " + std::to_string(pos));
      }
      current_.back().diacritics.emplace_back(glyph);
      return;
    }
    Category cat = table.category(glyph);
    if (cat == Category::voice_quality && last_ == Last::tone) {
      current_.back().tone_targets.push_back(
          glyph == "ʔ" ? ToneTarget::glottal() : ToneTarget::breathy());
      return;
    }
    validate_last();
    current_.push_back(IpaSymbol{std::string(glyph), {}, {}, cat});
    current_pos_ = pos;
    last_ = cat == Category::vowel ? Last::vowel : Last::other;
  }

  void validate_last() const {
    if (current_.empty()) return;
    const auto segment = current_.back().segment();
    if (!inv_.allows_segment(segment)) {
      fail(ErrorCode::unknown_symbol,
           "'" + segment + "' at byte " + std::to_string(current_pos_) +
               " is not in the inventory");
    }
  }

  void close_syllable(SyllabifiedTranscript& out, std::size_t pos) {
    if (current_.empty()) {
      fail(ErrorCode::empty_syllable,
           "empty syllable before byte " + std::to_string(pos));
    }
    validate_last();
    out.push_back(std::move(current_));
    current_.clear();
    last_ = Last::none;
  }

  const Inventory& inv_;
  std::size_t max_glyph_ = 0;
  Syllable current_;
  std::size_t current_pos_ = 0;
  Last last_ = Last::none;
};

}  // namespace

SyllabifiedTranscript tokenize_ipa(std::string_view text,
                                   const Inventory& inventory) {
  return Tokenizer(inventory).run(text);
}

SyllabifiedTranscript tokenize_ipa(std::string_view text) {
  static const Inventory universal = Inventory::universal();
  return tokenize_ipa(text, universal);
}

std::string render(const SyllabifiedTranscript& syllables) {
  std::string out;
  for (std::size_t i = 0; i < syllables.size(); ++i) {
    if (i > 0) out += '.';
    for (const auto& sym : syllables[i]) out += sym.render();
  }
  return out;
}

IpaSymbol parse_segment(std::string_view text, const PhoneTable& table) {
  // Segments never contain '.', so a single syllable comes back.
  Inventory universal = Inventory::universal(table);
  auto syllables = tokenize_ipa(text, universal);
  if (syllables.size() != 1 || syllables[0].size() != 1 ||
      !syllables[0][0].tone_targets.empty()) {
    fail(ErrorCode::unknown_symbol,
         "'" + std::string(text) + "' is not a single segment");
  }
  return syllables[0][0];
}

// ---------------------------------------------------------------------------
// Distances

namespace {

bool consonant_like(Category c) {
  return c == Category::consonant || c == Category::voice_quality;
}

bool comparable(const IpaSymbol& a, const IpaSymbol& b) {
  if (a.category == Category::vowel) return b.category == Category::vowel;
  return consonant_like(a.category) && consonant_like(b.category);
}

double quality_distance(const VowelQuality& a, const VowelQuality& b,
                        const DistanceWeights& w) {
  return w.height * std::abs(a.height - b.height) +
         w.backness * std::abs(a.backness - b.backness) +
         w.rounding * std::abs(a.rounding - b.rounding);
}

}  // namespace

double phone_distance(const IpaSymbol& a, const IpaSymbol& b,
                      const DistanceWeights& w, const PhoneTable& table) {
  if (!comparable(a, b)) {
    fail(ErrorCode::category_mismatch,
         "cannot compare " + std::string(to_string(a.category)) + " '" +
             a.segment() + "' with " + std::string(to_string(b.category)) +
             " '" + b.segment() + "'");
  }
  auto fa = table.features(a);
  auto fb = table.features(b);
  if (a.category == Category::vowel) {
    const auto& va = std::get<VowelFeatures>(fa);
    const auto& vb = std::get<VowelFeatures>(fb);
    return 0.5 * (quality_distance(va.onset, vb.onset, w) +
                  quality_distance(va.offset, vb.offset, w)) +
           w.length * std::abs(va.length - vb.length) +
           w.aspiration * std::abs(va.aspiration - vb.aspiration);
  }
  const auto& ca = std::get<ConsonantFeatures>(fa);
  const auto& cb = std::get<ConsonantFeatures>(fb);
  return w.place * std::abs(ca.place - cb.place) +
         w.manner * std::abs(ca.manner - cb.manner) +
         w.voicing * std::abs(ca.voicing - cb.voicing) +
         w.aspiration * std::abs(ca.aspiration - cb.aspiration) +
         w.length * std::abs(ca.length - cb.length);
}

bool differs_by_one_diacritic(const IpaSymbol& a, const IpaSymbol& b) {
  if (a.base != b.base) return false;
  const auto& longer = a.diacritics.size() > b.diacritics.size()
                           ? a.diacritics : b.diacritics;
  const auto& shorter = a.diacritics.size() > b.diacritics.size()
                            ? b.diacritics : a.diacritics;
  if (longer.size() != shorter.size() + 1) return false;
  // Removing one element of the longer list must give the shorter one.
  for (std::size_t skip = 0; skip < longer.size(); ++skip) {
    bool same = true;
    for (std::size_t i = 0, j = 0; i < longer.size(); ++i) {
      if (i == skip) continue;
      if (longer[i] != shorter[j++]) {
        same = false;
        break;
      }
    }
    if (same) return true;
  }
  return false;
}

PhoneMatch nearest_phone_match(const IpaSymbol& k,
                               std::span<const IpaSymbol> candidates,
                               const DistanceWeights& weights,
                               const PhoneTable& table) {
  std::vector<const IpaSymbol*> pool;
  for (const auto& c : candidates) {
    if (comparable(k, c)) pool.push_back(&c);
  }
  if (pool.empty()) {
    fail(ErrorCode::no_candidate,
         "no candidate of the same category as '" + k.segment() + "'");
  }
  std::sort(pool.begin(), pool.end(), [](const IpaSymbol* a, const IpaSymbol* b) {
    return a->segment() < b->segment();
  });
  const auto key = k.segment();
  for (const auto* c : pool) {
    if (c->segment() == key) return {*c, MatchKind::exact, 0.0};
  }
  for (const auto* c : pool) {
    if (differs_by_one_diacritic(k, *c)) {
      return {*c, MatchKind::diacritic, phone_distance(k, *c, weights, table)};
    }
  }
  const IpaSymbol* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto* c : pool) {
    double d = phone_distance(k, *c, weights, table);
    if (d < best_d) {  // strict: ties keep the lexicographically first
      best_d = d;
      best = c;
    }
  }
  return {*best, MatchKind::feature, best_d};
}

IpaSymbol nearest_phone(const IpaSymbol& k,
                        std::span<const IpaSymbol> candidates,
                        const DistanceWeights& weights,
                        const PhoneTable& table) {
  return nearest_phone_match(k, candidates, weights, table).symbol;
}

}  // namespace tonetier
