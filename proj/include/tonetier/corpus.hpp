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

// JSON-lines manifests and the seeded synthetic multilingual corpus.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tonetier/features.hpp"

namespace tonetier {

struct ManifestRecord {
  std::string utt_id;
  std::string lang;
  std::string speaker_id;
  std::string ipa;     // `.`-delimited syllables
  std::string source;  // feature (.tpf) or audio (.wav) path, relative to the manifest
  std::string split;   // train, dev or test

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;

  // Rejects duplicate utt_ids, missing fields and unknown splits (DataError).
  static Manifest parse(std::string_view jsonl);
  static Manifest read(const std::string& path);
  std::string serialize() const;
  void write(const std::string& path) const;

  std::vector<ManifestRecord> select(std::string_view lang,
                                     std::string_view split) const;
  std::vector<std::string> languages() const;
};

struct SynthLanguage {
  std::string name;
  std::vector<std::string> consonants;
  std::vector<std::string> vowels;
  std::vector<std::string> tones;  // tone descriptions such as "˧˥" or "˨˩h"
  int train = 200;
  int dev = 20;
  int test = 20;
};

struct SynthCorpusSpec {
  std::vector<SynthLanguage> languages;
  int speakers_per_language = 4;
  int min_syllables = 2;
  int max_syllables = 6;
  int min_phone_frames = 8;
  int max_phone_frames = 30;
  double noise_std = 0.5;
  double speaker_offset_std = 0.5;
  bool with_f0 = false;
  std::uint64_t seed = 1;

  // Three training languages with Mandarin-, Cantonese- and Vietnamese-like
  // tones plus a held-out Lao-like language.
  static SynthCorpusSpec defaults(std::uint64_t seed);
  // JSON object with the fields above; `languages` may be omitted to use the
  // defaults. Throws SpecInvalid.
  static SynthCorpusSpec parse(std::string_view json_text);
  std::string serialize() const;
  // Each language needs 6-12 phones and 3-6 tones from its inventory.
  void validate() const;
};

struct SynthUtterance {
  ManifestRecord record;
  Matrix features;
};

// In-memory corpus, ordered by language then split (train, dev, test).
std::vector<SynthUtterance> synth_corpus(const SynthCorpusSpec& spec);

// Writes features/<utt_id>.tpf and manifest.jsonl under `dir`.
Manifest write_synth_corpus(const SynthCorpusSpec& spec, const std::string& dir);

}  // namespace tonetier
