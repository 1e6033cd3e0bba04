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

#include "tonetier/corpus.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "text_util.hpp"
#include "tonetier/error.hpp"
#include "tonetier/tpf.hpp"

namespace tonetier {

using json = nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kSplits = {"train", "dev", "test"};

std::string field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    fail(ErrorCode::format_error,
         "manifest line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Manifest Manifest::parse(std::string_view jsonl) {
  Manifest m;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const std::string& raw : detail::split(jsonl, '\n')) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::format_error, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    ManifestRecord r{field(j, "utt_id", line_no), field(j, "lang", line_no),
                     field(j, "speaker_id", line_no), field(j, "ipa", line_no),
                     field(j, "source", line_no), field(j, "split", line_no)};
    if (!kSplits.count(r.split)) {
      fail(ErrorCode::format_error, "manifest line " + std::to_string(line_no) +
                                        ": split must be train, dev or test");
    }
    if (!seen.insert(r.utt_id).second) {
      fail(ErrorCode::format_error, "duplicate utt_id '" + r.utt_id + "'");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest Manifest::read(const std::string& path) { return parse(detail::read_file(path)); }

std::string Manifest::serialize() const {
  std::string out;
  for (const ManifestRecord& r : records) {
    json j = {{"utt_id", r.utt_id}, {"lang", r.lang},     {"speaker_id", r.speaker_id},
              {"ipa", r.ipa},       {"source", r.source}, {"split", r.split}};
    out += j.dump() + "\n";
  }
  return out;
}

void Manifest::write(const std::string& path) const { detail::write_file(path, serialize()); }

std::vector<ManifestRecord> Manifest::select(std::string_view lang, std::string_view split) const {
  std::vector<ManifestRecord> out;
  for (const ManifestRecord& r : records) {
    if ((lang.empty() || r.lang == lang) && (split.empty() || r.split == split)) out.push_back(r);
  }
  return out;
}

std::vector<std::string> Manifest::languages() const {
  std::set<std::string> langs;
  for (const ManifestRecord& r : records) langs.insert(r.lang);
  return {langs.begin(), langs.end()};
}

// ---------------------------------------------------------------------------
// Spec

SynthCorpusSpec SynthCorpusSpec::defaults(std::uint64_t seed) {
  SynthCorpusSpec s;
  s.seed = seed;
  s.languages = {
      {"man", {"p", "t", "k", "m", "n", "s", "tɕ"}, {"a", "i", "u", "ɤ", "ɑʊ"},
       {"˥", "˧˥", "˨˩˦", "˥˩"}},
      {"can", {"p", "t", "k", "m", "n", "l", "ts"}, {"a", "aː", "i", "ɔ", "ei"},
       {"˥", "˧", "˨", "˧˥", "˨˩", "˩˧"}},
      {"vie", {"ɓ", "ɗ", "t", "k", "m", "n", "l"}, {"a", "i", "uː", "ə", "iə"},
       {"˧", "˧˥", "˧˨ʔ", "˨˩h", "˨˩˨", "˧ʔ˥"}},
      {"lao", {"p", "t", "k", "m", "n", "l", "s"}, {"a", "i", "uː", "ɤ", "ɑo"},
       {"˩", "˧", "˥", "˩˧", "˥˧", "˧˩"}},
  };
  return s;
}

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

const std::set<std::string, std::less<>> kSpecKeys = {
    "languages", "speakers_per_language", "min_syllables", "max_syllables",
    "min_phone_frames", "max_phone_frames", "noise_std", "speaker_offset_std",
    "with_f0", "seed"};

const std::set<std::string, std::less<>> kLanguageKeys = {
    "name", "consonants", "vowels", "tones", "train", "dev", "test"};

}  // namespace

SynthCorpusSpec SynthCorpusSpec::parse(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) fail(ErrorCode::spec_invalid, "corpus spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!kSpecKeys.count(key)) fail(ErrorCode::spec_invalid, "unknown corpus spec key '" + key + "'");
    }
    SynthCorpusSpec s = defaults(j.value("seed", std::uint64_t{1}));
    read_opt(j, "speakers_per_language", s.speakers_per_language);
    read_opt(j, "min_syllables", s.min_syllables);
    read_opt(j, "max_syllables", s.max_syllables);
    read_opt(j, "min_phone_frames", s.min_phone_frames);
    read_opt(j, "max_phone_frames", s.max_phone_frames);
    read_opt(j, "noise_std", s.noise_std);
    read_opt(j, "speaker_offset_std", s.speaker_offset_std);
    read_opt(j, "with_f0", s.with_f0);
    if (j.contains("languages")) {
      s.languages.clear();
      for (const json& l : j.at("languages")) {
        for (const auto& [key, value] : l.items()) {
          if (!kLanguageKeys.count(key)) {
            fail(ErrorCode::spec_invalid, "unknown language spec key '" + key + "'");
          }
        }
        SynthLanguage lang;
        lang.name = l.at("name");
        lang.consonants = l.at("consonants").get<std::vector<std::string>>();
        lang.vowels = l.at("vowels").get<std::vector<std::string>>();
        lang.tones = l.at("tones").get<std::vector<std::string>>();
        read_opt(l, "train", lang.train);
        read_opt(l, "dev", lang.dev);
        read_opt(l, "test", lang.test);
        s.languages.push_back(std::move(lang));
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::spec_invalid, std::string("corpus spec: ") + e.what());
  }
}

std::string SynthCorpusSpec::serialize() const {
  json langs = json::array();
  for (const SynthLanguage& l : languages) {
    langs.push_back({{"name", l.name}, {"consonants", l.consonants}, {"vowels", l.vowels},
                     {"tones", l.tones}, {"train", l.train}, {"dev", l.dev}, {"test", l.test}});
  }
  json j = {{"languages", langs},
            {"speakers_per_language", speakers_per_language},
            {"min_syllables", min_syllables},
            {"max_syllables", max_syllables},
            {"min_phone_frames", min_phone_frames},
            {"max_phone_frames", max_phone_frames},
            {"noise_std", noise_std},
            {"speaker_offset_std", speaker_offset_std},
            {"with_f0", with_f0},
            {"seed", seed}};
  return j.dump(2) + "\n";
}

void SynthCorpusSpec::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::spec_invalid, msg); };
  if (languages.empty()) bad("corpus spec needs at least one language");
  if (speakers_per_language < 1) bad("speakers_per_language must be positive");
  if (min_syllables < 1 || max_syllables < min_syllables) bad("invalid syllable range");
  if (min_phone_frames < 1 || max_phone_frames < min_phone_frames) bad("invalid phone duration range");
  if (noise_std < 0 || speaker_offset_std < 0) bad("noise levels must be non-negative");
  const auto builtin = Inventory::builtin_languages();
  std::set<std::string> names;
  for (const SynthLanguage& l : languages) {
    if (l.name.empty() || !names.insert(l.name).second) bad("language names must be unique and non-empty");
    if (l.name.find_first_of("/_ \t") != std::string::npos) {
      bad("language name '" + l.name + "' may not contain '/', '_' or whitespace");
    }
    const bool known = std::find(builtin.begin(), builtin.end(), l.name) != builtin.end();
    const Inventory inv = known ? Inventory::builtin(l.name) : Inventory::universal();
    const std::size_t phones = l.consonants.size() + l.vowels.size();
    if (phones < 6 || phones > 12) bad(l.name + ": needs 6-12 phones, has " + std::to_string(phones));
    if (l.consonants.empty() || l.vowels.empty()) bad(l.name + ": needs consonants and vowels");
    if (l.tones.size() < 3 || l.tones.size() > 6) {
      bad(l.name + ": needs 3-6 tones, has " + std::to_string(l.tones.size()));
    }
    if (l.train < 0 || l.dev < 0 || l.test < 0) bad(l.name + ": split sizes must be non-negative");
    try {
      for (const std::string& c : l.consonants) {
        const IpaSymbol s = parse_segment(c);
        if (s.category != Category::consonant || !inv.allows_segment(c)) {
          bad(l.name + ": '" + c + "' is not a consonant of its inventory");
        }
      }
      for (const std::string& v : l.vowels) {
        const IpaSymbol s = parse_segment(v);
        if (s.category != Category::vowel || !inv.allows_segment(v)) {
          bad(l.name + ": '" + v + "' is not a vowel of its inventory");
        }
      }
      for (const std::string& t : l.tones) {
        const auto syl = tokenize_ipa(l.vowels.front() + t, inv);
        if (syl.size() != 1 || syl[0].size() != 1 || !syl[0][0].has_pitch()) {
          bad(l.name + ": '" + t + "' is not a tone description");
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::spec_invalid) throw;
      bad(l.name + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Generation

namespace {

std::uint64_t mix(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h ^ (seed * 0x9E3779B97F4A7C15ull);
}

std::string utt_name(const std::string& lang, const char* split, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return lang + "_" + split + "_" + buf;
}

}  // namespace

std::vector<SynthUtterance> synth_corpus(const SynthCorpusSpec& spec) {
  spec.validate();
  const int width = spec.with_f0 ? kNumMelBins + 1 : kNumMelBins;
  std::vector<SynthUtterance> out;
  for (const SynthLanguage& lang : spec.languages) {
    std::mt19937_64 rng(mix(spec.seed, lang.name));
    std::normal_distribution<double> offset(0.0, spec.speaker_offset_std);
    std::vector<std::vector<double>> speakers(spec.speakers_per_language);
    for (auto& off : speakers) {
      off.resize(width);
      for (int c = 0; c < kNumMelBins; ++c) off[c] = offset(rng);
      if (spec.with_f0) off[kNumMelBins] = 20.0 * offset(rng);
    }
    std::uniform_int_distribution<int> n_syl(spec.min_syllables, spec.max_syllables);
    std::uniform_int_distribution<int> frames(spec.min_phone_frames, spec.max_phone_frames);
    std::uniform_int_distribution<std::size_t> pick_c(0, lang.consonants.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_v(0, lang.vowels.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_t(0, lang.tones.size() - 1);

    const std::pair<const char*, int> splits[] = {
        {"train", lang.train}, {"dev", lang.dev}, {"test", lang.test}};
    for (const auto& [split, count] : splits) {
      for (int i = 0; i < count; ++i) {
        SynthUtterance u;
        const int spk = i % spec.speakers_per_language;
        u.record.utt_id = utt_name(lang.name, split, i);
        u.record.lang = lang.name;
        u.record.speaker_id = lang.name + "_spk" + std::to_string(spk);
        u.record.split = split;
        u.record.source = "features/" + u.record.utt_id + ".tpf";
        SynthPlan plan;
        plan.with_f0 = spec.with_f0;
        plan.noise_std = spec.noise_std;
        plan.speaker_offset = speakers[spk];
        const int syllables = n_syl(rng);
        for (int s = 0; s < syllables; ++s) {
          const std::string syl = lang.consonants[pick_c(rng)] + lang.vowels[pick_v(rng)] +
                                  lang.tones[pick_t(rng)];
          if (s > 0) u.record.ipa += ".";
          u.record.ipa += syl;
          const SyllabifiedTranscript tokens = tokenize_ipa(syl);
          for (const IpaSymbol& sym : tokens.at(0)) {
            plan.phones.push_back({sym, frames(rng)});
          }
        }
        plan.seed = rng();
        u.features = synth_features(plan);
        out.push_back(std::move(u));
      }
    }
  }
  return out;
}

Manifest write_synth_corpus(const SynthCorpusSpec& spec, const std::string& dir) {
  const std::vector<SynthUtterance> corpus = synth_corpus(spec);
  std::error_code ec;
  std::filesystem::create_directories(std::filesystem::path(dir) / "features", ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + dir + "/features': " + ec.message());
  Manifest m;
  for (const SynthUtterance& u : corpus) {
    write_tpf((std::filesystem::path(dir) / u.record.source).string(), u.features);
    m.records.push_back(u.record);
  }
  m.write((std::filesystem::path(dir) / "manifest.jsonl").string());
  return m;
}

}  // namespace tonetier
