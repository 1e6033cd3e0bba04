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

// Manifest-driven pipeline stages and the multilingual, cross-lingual and
// monolingual experiment settings.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tonetier/corpus.hpp"
#include "tonetier/metrics.hpp"
#include "tonetier/training.hpp"
#include "tonetier/transfer.hpp"

namespace tonetier {

// Inventory used to tokenize a language: the built-in one when it exists,
// otherwise the universal inventory.
Inventory language_inventory(const std::string& lang);

// Loads every record's features (TPF1 as stored, WAV through log-Mel plus
// optional F0) and Z-normalizes them per speaker. Paths are relative to
// base_dir.
std::vector<FeatureMatrix> featurize(const Manifest& manifest, const std::string& base_dir,
                                     bool with_f0);

// Writes normalized features to out_dir/features and returns a manifest
// pointing at them.
Manifest featurize_to_dir(const Manifest& manifest, const std::string& base_dir,
                          const std::string& out_dir, bool with_f0);

std::vector<TokenizedUtterance> tokenize_manifest(const Manifest& manifest);

// Reference tiers of one utterance for a variant.
TierHypotheses reference_tiers(const TokenizedUtterance& utt, const ModelVariant& variant,
                               const TieringOptions& options = {});

// Features and transcripts aligned with the manifest records.
struct Dataset {
  Manifest manifest;
  std::vector<TokenizedUtterance> utterances;
  std::vector<FeatureMatrix> features;

  static Dataset load(const Manifest& manifest, const std::string& base_dir, bool with_f0);
  // Indices of records in `lang` (any language when empty) and `split`, in
  // manifest order.
  std::vector<std::size_t> select(std::string_view lang, std::string_view split) const;
  int feature_dim() const;
};

std::vector<Example> make_examples(const Dataset& data, std::span<const std::size_t> indices,
                                   const AlphabetSet& alphabets, const ModelVariant& variant,
                                   const TieringOptions& options = {});

AlphabetSet dataset_alphabets(const Dataset& data, std::span<const std::size_t> indices,
                              const ModelVariant& variant, const TieringOptions& options = {});

enum class Setting : std::uint8_t { multilingual, crosslingual, monolingual };
std::string_view to_string(Setting s);
Setting parse_setting(std::string_view s);

struct ExperimentPlan {
  Setting setting = Setting::multilingual;
  int variant = 1;
  std::vector<std::string> train_languages;  // empty: every non-adaptation language
  std::string adapt_language;                // cross-lingual and monolingual
  int adapt_utterances = 60;                 // taken from the start of its train split
  std::uint64_t seed = 1;

  int hidden_dim = 64;
  int fc_dim = 64;
  int mono_hidden_dim = 32;
  int mono_fc_dim = 32;
  OptimizerConfig optimizer{1.0, 0.95, 1e-6};
  int max_epochs = 60;
  int patience = 10;
  int batch_size = 8;
  int adapt_head_epochs = 20;
  int adapt_full_epochs = 60;
  DecodeOptions decode;
  bool with_f0 = false;  // only affects WAV sources

  // key=value lines using the field names above; lists are comma-separated;
  // `learning_rate`, `rho`, `epsilon`, `beam_width`, `lm_weight` set the
  // nested options.
  static ExperimentPlan parse(std::string_view text);
  std::string serialize() const;
};

struct ExperimentResult {
  std::vector<ReportRow> report;
  Checkpoint checkpoint;
  std::vector<SymbolMapping> audit;  // cross-lingual only
  std::vector<ScoredUtterance> scored;
};

// Training languages of a plan (every non-adaptation language when the plan
// lists none), validated against the dataset.
std::vector<std::string> plan_train_languages(const Dataset& data, const ExperimentPlan& plan);

// Trains a fresh model on the train splits of `languages`, early-stopping on
// their dev splits, and adds their bigram LMs.
Checkpoint train_multilingual(const Dataset& data, const ExperimentPlan& plan,
                              std::span<const std::string> languages);

// Initializes heads for plan.adapt_language from the checkpoint's languages
// and runs both adaptation stages on its first adapt_utterances train
// records. Returns the mapping audit.
std::vector<SymbolMapping> adapt_to_language(Checkpoint& ckpt, const Dataset& data,
                                             const ExperimentPlan& plan);

// Small from-scratch model on the adaptation data only.
Checkpoint train_monolingual(const Dataset& data, const ExperimentPlan& plan);

// Runs a plan on a loaded dataset. Splits must be disjoint by utt_id.
ExperimentResult run_experiment(const Dataset& data, const ExperimentPlan& plan);

// Writes report.csv, report.txt, model.ckpt, hypotheses.tsv and, for
// cross-lingual plans, mapping_audit.tsv under out_dir.
void write_experiment(const ExperimentResult& result, const std::string& out_dir);

// Decodes the given records and pairs them with their references.
std::vector<ScoredUtterance> decode_dataset(const Checkpoint& ckpt, const Dataset& data,
                                            std::span<const std::size_t> indices,
                                            const DecodeOptions& options);

// Hypothesis file: `utt_id<TAB>tier<TAB>sym sym ...` per utterance and tier.
std::string format_hypotheses(std::span<const ScoredUtterance> scored);
std::map<std::string, TierHypotheses> parse_hypotheses(std::string_view text);

// Pairs every manifest record of `split` with its hypotheses; a record with
// no hypotheses is a DataError.
std::vector<ScoredUtterance> score_hypotheses(const Manifest& manifest, std::string_view split,
                                              const std::map<std::string, TierHypotheses>& hyps,
                                              const ModelVariant& variant);

// Checks utt_id disjointness of train/dev/test; throws FormatError.
void check_splits(const Manifest& manifest);

}  // namespace tonetier
