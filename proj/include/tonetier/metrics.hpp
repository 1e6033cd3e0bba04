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

// Edit-distance error rates, class-filtered breakdowns and report rendering.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tonetier/tiering.hpp"

namespace tonetier {

struct EditCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long ref_length = 0;

  long errors() const { return substitutions + deletions + insertions; }
  bool defined() const { return ref_length > 0; }
  // Percent; NaN when the reference is empty.
  double rate() const;

  EditCounts& operator+=(const EditCounts& o);
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Levenshtein alignment; among minimal alignments the backtrace prefers a
// substitution (or match), then a deletion, then an insertion.
EditCounts edit_distance(std::span<const std::string> ref,
                         std::span<const std::string> hyp);

using SymbolFilter = std::function<bool(const std::string&)>;

// Deletes out-of-class symbols from both sides, then aligns.
EditCounts filtered_counts(std::span<const std::string> ref,
                           std::span<const std::string> hyp,
                           const SymbolFilter& keep);

// Segments of a joint- or phone-tier sequence with tones removed.
std::vector<std::string> phones_from_joint(std::span<const std::string> joint);
// Tone tier reconstructed from a joint-tier sequence: each vowel contributes
// its tone letters (or <neutral>) followed by <boundary>.
std::vector<std::string> tones_from_joint(std::span<const std::string> joint);

// Class predicates over tone-stripped segments. Segmental ʔ/h count as
// consonants.
bool is_consonant_segment(const std::string& segment);
bool is_vowel_segment(const std::string& segment);

struct ScoredUtterance {
  std::string utt_id;
  std::string lang;
  TierHypotheses ref;
  TierHypotheses hyp;
};

struct ReportRow {
  std::string metric;    // JER PER TER VER CoER VoER PER-joint TER-joint
  int model = 1;
  std::string language;  // a language code or "all"
  EditCounts counts;
};

// Metrics produced for a variant: JER from the joint tier (models 1, 3, 4),
// PER/TER/VER from dedicated tiers, PER/TER from the joint tier (models 1,
// 3, 4), and CoER/VoER from the joint tier or, for model 2, the phone tier.
std::vector<std::string> report_metrics(const ModelVariant& variant);

// Per-language rows followed by a pooled "all" row for each metric. Throws
// MissingTier when a needed tier is absent.
std::vector<ReportRow> build_report(std::span<const ScoredUtterance> utterances,
                                    const ModelVariant& variant);

// `metric,model,language,S,D,I,N,rate` with rates to two decimals or
// `undefined`.
std::string report_csv(std::span<const ReportRow> rows);

// Inverse of report_csv; throws FormatError.
std::vector<ReportRow> parse_report_csv(std::string_view text);
// Metric/model rows against language columns.
std::string report_table(std::span<const ReportRow> rows);
std::string format_rate(const EditCounts& counts);

}  // namespace tonetier
