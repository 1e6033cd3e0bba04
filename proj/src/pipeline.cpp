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

#include "tonetier/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "text_util.hpp"
#include "tonetier/error.hpp"
#include "tonetier/tpf.hpp"

namespace tonetier {

namespace fs = std::filesystem;

Inventory language_inventory(const std::string& lang) {
  const auto known = Inventory::builtin_languages();
  if (std::find(known.begin(), known.end(), lang) != known.end()) return Inventory::builtin(lang);
  return Inventory::universal();
}

std::vector<FeatureMatrix> featurize(const Manifest& manifest, const std::string& base_dir,
                                     bool with_f0) {
  std::vector<FeatureMatrix> out;
  out.reserve(manifest.records.size());
  for (const ManifestRecord& r : manifest.records) {
    const fs::path path = fs::path(base_dir) / r.source;
    FeatureMatrix fm;
    fm.utt_id = r.utt_id;
    fm.speaker_id = r.speaker_id;
    const std::string ext = path.extension().string();
    if (ext == ".tpf") {
      fm.frames = read_tpf(path.string()).cast<double>();
    } else if (ext == ".wav") {
      const Waveform w = read_wav(path.string());
      fm.frames = log_mel(w.samples, w.sample_rate);
      if (with_f0) fm.frames = append_f0(fm.frames, extract_f0(w.samples, w.sample_rate));
    } else {
      fail(ErrorCode::format_error, "'" + r.utt_id + "': source must be a .tpf or .wav file");
    }
    if (fm.frames.rows() < 1 || !fm.frames.allFinite()) {
      fail(ErrorCode::format_error, "'" + r.utt_id + "': empty or non-finite features");
    }
    if (!out.empty() && out.front().frames.cols() != fm.frames.cols()) {
      fail(ErrorCode::dim_mismatch, "'" + r.utt_id + "' has " + std::to_string(fm.frames.cols()) +
                                        " feature columns, earlier records have " +
                                        std::to_string(out.front().frames.cols()));
    }
    out.push_back(std::move(fm));
  }
  znorm_per_speaker(out);
  return out;
}

Manifest featurize_to_dir(const Manifest& manifest, const std::string& base_dir,
                          const std::string& out_dir, bool with_f0) {
  const std::vector<FeatureMatrix> feats = featurize(manifest, base_dir, with_f0);
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "features", ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + out_dir + "/features'");
  Manifest out = manifest;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    out.records[i].source = "features/" + out.records[i].utt_id + ".tpf";
    write_tpf((fs::path(out_dir) / out.records[i].source).string(), feats[i].frames);
  }
  out.write((fs::path(out_dir) / "manifest.jsonl").string());
  return out;
}

std::vector<TokenizedUtterance> tokenize_manifest(const Manifest& manifest) {
  std::map<std::string, Inventory> inventories;
  std::vector<TokenizedUtterance> out;
  for (const ManifestRecord& r : manifest.records) {
    auto it = inventories.find(r.lang);
    if (it == inventories.end()) it = inventories.emplace(r.lang, language_inventory(r.lang)).first;
    try {
      out.push_back({r.utt_id, r.lang, tokenize_ipa(r.ipa, it->second)});
    } catch (const Error& e) {
      fail(e.code(), "'" + r.utt_id + "': " + e.what());
    }
  }
  return out;
}

TierHypotheses reference_tiers(const TokenizedUtterance& utt, const ModelVariant& variant,
                               const TieringOptions& options) {
  TierHypotheses out;
  for (auto& [tier, t] : build_tiers(utt.syllables, utt.lang, variant, options)) {
    out[tier] = std::move(t.symbols);
  }
  return out;
}

void check_splits(const Manifest& manifest) {
  std::map<std::string, std::string> seen;
  for (const ManifestRecord& r : manifest.records) {
    auto [it, fresh] = seen.emplace(r.utt_id, r.split);
    if (!fresh) {
      fail(ErrorCode::format_error, "utt_id '" + r.utt_id + "' appears in " + it->second +
                                        " and " + r.split);
    }
  }
}

Dataset Dataset::load(const Manifest& manifest, const std::string& base_dir, bool with_f0) {
  check_splits(manifest);
  Dataset d;
  d.manifest = manifest;
  d.utterances = tokenize_manifest(manifest);
  d.features = featurize(manifest, base_dir, with_f0);
  return d;
}

std::vector<std::size_t> Dataset::select(std::string_view lang, std::string_view split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const ManifestRecord& r = manifest.records[i];
    if ((lang.empty() || r.lang == lang) && (split.empty() || r.split == split)) out.push_back(i);
  }
  return out;
}

int Dataset::feature_dim() const {
  return features.empty() ? 0 : static_cast<int>(features.front().frames.cols());
}

std::vector<Example> make_examples(const Dataset& data, std::span<const std::size_t> indices,
                                   const AlphabetSet& alphabets, const ModelVariant& variant,
                                   const TieringOptions& options) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(make_example(data.utterances[i], data.features[i].frames.cast<float>(),
                               alphabets, variant, options));
  }
  return out;
}

AlphabetSet dataset_alphabets(const Dataset& data, std::span<const std::size_t> indices,
                              const ModelVariant& variant, const TieringOptions& options) {
  std::vector<TokenizedUtterance> utts;
  for (std::size_t i : indices) utts.push_back(data.utterances[i]);
  return build_alphabets(utts, variant, options);
}

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::multilingual: return "multilingual";
    case Setting::crosslingual: return "cross-lingual";
    case Setting::monolingual: return "monolingual";
  }
  return "?";
}

Setting parse_setting(std::string_view s) {
  if (s == "multilingual") return Setting::multilingual;
  if (s == "cross-lingual" || s == "crosslingual") return Setting::crosslingual;
  if (s == "monolingual") return Setting::monolingual;
  fail(ErrorCode::config_error, "unknown setting '" + std::string(s) + "'");
}

ExperimentPlan ExperimentPlan::parse(std::string_view text) {
  ExperimentPlan p;
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    auto as_int = [&] { return static_cast<int>(detail::parse_int(value, key)); };
    auto as_double = [&] { return detail::parse_double(value, key); };
    if (key == "setting") p.setting = parse_setting(value);
    else if (key == "variant") p.variant = as_int();
    else if (key == "train_languages") {
      p.train_languages.clear();
      for (const auto& l : detail::split(value, ',')) {
        if (!detail::trim(l).empty()) p.train_languages.push_back(detail::trim(l));
      }
    } else if (key == "adapt_language") p.adapt_language = value;
    else if (key == "adapt_utterances") p.adapt_utterances = as_int();
    else if (key == "seed") p.seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
    else if (key == "hidden_dim") p.hidden_dim = as_int();
    else if (key == "fc_dim") p.fc_dim = as_int();
    else if (key == "mono_hidden_dim") p.mono_hidden_dim = as_int();
    else if (key == "mono_fc_dim") p.mono_fc_dim = as_int();
    else if (key == "learning_rate") p.optimizer.learning_rate = as_double();
    else if (key == "rho") p.optimizer.rho = as_double();
    else if (key == "epsilon") p.optimizer.epsilon = as_double();
    else if (key == "max_epochs") p.max_epochs = as_int();
    else if (key == "patience") p.patience = as_int();
    else if (key == "batch_size") p.batch_size = as_int();
    else if (key == "adapt_head_epochs") p.adapt_head_epochs = as_int();
    else if (key == "adapt_full_epochs") p.adapt_full_epochs = as_int();
    else if (key == "beam_width") p.decode.beam_width = as_int();
    else if (key == "lm_weight") p.decode.lm_weight = as_double();
    else if (key == "with_f0") p.with_f0 = value == "true" || value == "1";
    else fail(ErrorCode::config_error, "unknown plan key '" + key + "'");
  }
  ModelVariant v(p.variant);
  if (p.setting != Setting::multilingual && p.adapt_language.empty()) {
    fail(ErrorCode::config_error, "cross-lingual and monolingual plans need adapt_language");
  }
  if (std::find(p.train_languages.begin(), p.train_languages.end(), p.adapt_language) !=
      p.train_languages.end()) {
    fail(ErrorCode::config_error, "adapt_language must not be a training language");
  }
  if (p.adapt_utterances < 1 || p.batch_size < 1 || p.patience < 1 || p.decode.beam_width < 1) {
    fail(ErrorCode::config_error, "adapt_utterances, batch_size, patience and beam_width must be positive");
  }
  return p;
}

std::string ExperimentPlan::serialize() const {
  std::ostringstream out;
  out.precision(17);
  std::string langs;
  for (const auto& l : train_languages) langs += (langs.empty() ? "" : ",") + l;
  out << "setting = " << to_string(setting) << "\n"
      << "variant = " << variant << "\n"
      << "train_languages = " << langs << "\n"
      << "adapt_language = " << adapt_language << "\n"
      << "adapt_utterances = " << adapt_utterances << "\n"
      << "seed = " << seed << "\n"
      << "hidden_dim = " << hidden_dim << "\n"
      << "fc_dim = " << fc_dim << "\n"
      << "mono_hidden_dim = " << mono_hidden_dim << "\n"
      << "mono_fc_dim = " << mono_fc_dim << "\n"
      << "learning_rate = " << optimizer.learning_rate << "\n"
      << "rho = " << optimizer.rho << "\n"
      << "epsilon = " << optimizer.epsilon << "\n"
      << "max_epochs = " << max_epochs << "\n"
      << "patience = " << patience << "\n"
      << "batch_size = " << batch_size << "\n"
      << "adapt_head_epochs = " << adapt_head_epochs << "\n"
      << "adapt_full_epochs = " << adapt_full_epochs << "\n"
      << "beam_width = " << decode.beam_width << "\n"
      << "lm_weight = " << decode.lm_weight << "\n"
      << "with_f0 = " << (with_f0 ? "true" : "false") << "\n";
  return out.str();
}

std::vector<ScoredUtterance> decode_dataset(const Checkpoint& ckpt, const Dataset& data,
                                            std::span<const std::size_t> indices,
                                            const DecodeOptions& options) {
  std::vector<ScoredUtterance> out;
  for (std::size_t i : indices) {
    const TokenizedUtterance& u = data.utterances[i];
    out.push_back({u.utt_id, u.lang, reference_tiers(u, ckpt.model.variant()),
                   decode_utterance(ckpt, data.features[i].frames.cast<float>(), u.lang, options)});
  }
  return out;
}

namespace {

std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TrainOptions train_options(const ExperimentPlan& p, int max_epochs, std::uint64_t salt) {
  TrainOptions o;
  o.max_epochs = max_epochs;
  o.patience = p.patience;
  o.batch_size = p.batch_size;
  o.seed = p.seed * 1000003ull + salt;
  return o;
}

void add_language_models(Checkpoint& ckpt, std::span<const Example> examples,
                         const AlphabetSet& alphabets) {
  for (auto& [key, lm] : train_language_models(examples, alphabets)) {
    ckpt.lms.insert_or_assign(key, std::move(lm));
  }
}

}  // namespace

std::vector<std::string> plan_train_languages(const Dataset& data, const ExperimentPlan& plan) {
  const auto langs = data.manifest.languages();
  auto has_lang = [&](const std::string& l) {
    return std::find(langs.begin(), langs.end(), l) != langs.end();
  };
  std::vector<std::string> train_langs = plan.train_languages;
  if (train_langs.empty()) {
    for (const auto& l : langs)
      if (l != plan.adapt_language) train_langs.push_back(l);
  }
  for (const auto& l : train_langs) {
    if (!has_lang(l)) fail(ErrorCode::data_empty, "no records for training language '" + l + "'");
  }
  if (plan.setting == Setting::crosslingual &&
      std::find(train_langs.begin(), train_langs.end(), plan.adapt_language) != train_langs.end()) {
    fail(ErrorCode::config_error,
         "adaptation language '" + plan.adapt_language + "' is also a training language");
  }
  if (plan.setting != Setting::multilingual && plan.adapt_language.empty()) {
    fail(ErrorCode::config_error, "the plan names no adaptation language");
  }
  if (plan.setting != Setting::multilingual && !has_lang(plan.adapt_language)) {
    fail(ErrorCode::data_empty, "no records for adaptation language '" + plan.adapt_language + "'");
  }
  return train_langs;
}

Checkpoint train_multilingual(const Dataset& data, const ExperimentPlan& plan,
                              std::span<const std::string> languages) {
  const ModelVariant variant(plan.variant);
  std::vector<std::size_t> tr, dv;
  for (const auto& l : languages) {
    tr = concat(tr, data.select(l, "train"));
    dv = concat(dv, data.select(l, "dev"));
  }
  if (tr.empty()) fail(ErrorCode::data_empty, "no training utterances");
  const AlphabetSet alph = dataset_alphabets(data, concat(tr, dv), variant);
  Checkpoint ckpt;
  ckpt.model = AcousticModel<float>(
      ModelConfig{data.feature_dim(), plan.hidden_dim, plan.fc_dim, plan.variant}, alph, plan.seed);
  ckpt.optimizer = Adadelta(plan.optimizer);
  const auto train_ex = make_examples(data, tr, alph, variant);
  const auto dev_ex = make_examples(data, dv, alph, variant);
  ckpt.state = train(ckpt.model, ckpt.optimizer, train_ex, dev_ex, train_options(plan, plan.max_epochs, 1));
  add_language_models(ckpt, train_ex, alph);
  return ckpt;
}

namespace {

struct AdaptSplits {
  std::vector<std::size_t> train, dev;
};

AdaptSplits adapt_splits(const Dataset& data, const ExperimentPlan& plan) {
  AdaptSplits s{data.select(plan.adapt_language, "train"), data.select(plan.adapt_language, "dev")};
  if (static_cast<int>(s.train.size()) > plan.adapt_utterances) s.train.resize(plan.adapt_utterances);
  if (s.train.empty()) fail(ErrorCode::data_empty, "no adaptation utterances for '" + plan.adapt_language + "'");
  return s;
}

}  // namespace

std::vector<SymbolMapping> adapt_to_language(Checkpoint& ckpt, const Dataset& data,
                                             const ExperimentPlan& plan) {
  const ModelVariant variant(plan.variant);
  if (ckpt.model.variant() != variant) {
    fail(ErrorCode::config_error, "plan variant " + std::to_string(plan.variant) +
                                      " does not match the checkpoint's model " +
                                      std::to_string(ckpt.model.variant().id()));
  }
  for (const auto& l : ckpt.model.languages()) {
    if (l == plan.adapt_language) {
      fail(ErrorCode::config_error, "the checkpoint was already trained on '" + l + "'");
    }
  }
  const AdaptSplits s = adapt_splits(data, plan);
  const AlphabetSet target = dataset_alphabets(data, concat(s.train, s.dev), variant);
  std::vector<SymbolMapping> audit = init_language_heads(ckpt.model, target);
  const auto train_ex = make_examples(data, s.train, ckpt.model.alphabets(), variant);
  const auto dev_ex = make_examples(data, s.dev, ckpt.model.alphabets(), variant);
  AdaptOptions ao{train_options(plan, plan.adapt_head_epochs, 2),
                  train_options(plan, plan.adapt_full_epochs, 3)};
  adapt(ckpt, train_ex, dev_ex, ao);
  add_language_models(ckpt, train_ex, target);
  return audit;
}

Checkpoint train_monolingual(const Dataset& data, const ExperimentPlan& plan) {
  const ModelVariant variant(plan.variant);
  const AdaptSplits s = adapt_splits(data, plan);
  const AlphabetSet target = dataset_alphabets(data, concat(s.train, s.dev), variant);
  Checkpoint ckpt;
  ckpt.model = AcousticModel<float>(
      ModelConfig{data.feature_dim(), plan.mono_hidden_dim, plan.mono_fc_dim, plan.variant}, target,
      plan.seed);
  ckpt.optimizer = Adadelta(plan.optimizer);
  const auto train_ex = make_examples(data, s.train, target, variant);
  const auto dev_ex = make_examples(data, s.dev, target, variant);
  ckpt.state = train(ckpt.model, ckpt.optimizer, train_ex, dev_ex,
                     train_options(plan, plan.adapt_head_epochs + plan.adapt_full_epochs, 4));
  add_language_models(ckpt, train_ex, target);
  return ckpt;
}

ExperimentResult run_experiment(const Dataset& data, const ExperimentPlan& plan) {
  check_splits(data.manifest);
  const std::vector<std::string> train_langs = plan_train_languages(data, plan);
  ExperimentResult result;
  std::vector<std::size_t> test_idx;
  switch (plan.setting) {
    case Setting::multilingual:
      result.checkpoint = train_multilingual(data, plan, train_langs);
      for (const auto& l : train_langs) test_idx = concat(test_idx, data.select(l, "test"));
      break;
    case Setting::crosslingual:
      result.checkpoint = train_multilingual(data, plan, train_langs);
      result.audit = adapt_to_language(result.checkpoint, data, plan);
      test_idx = data.select(plan.adapt_language, "test");
      break;
    case Setting::monolingual:
      result.checkpoint = train_monolingual(data, plan);
      test_idx = data.select(plan.adapt_language, "test");
      break;
  }
  result.scored = decode_dataset(result.checkpoint, data, test_idx, plan.decode);
  result.report = build_report(result.scored, ModelVariant(plan.variant));
  return result;
}

void write_experiment(const ExperimentResult& result, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + out_dir + "'");
  const fs::path dir(out_dir);
  detail::write_file((dir / "report.csv").string(), report_csv(result.report));
  detail::write_file((dir / "report.txt").string(), report_table(result.report));
  save_checkpoint((dir / "model.ckpt").string(), result.checkpoint);
  detail::write_file((dir / "hypotheses.tsv").string(), format_hypotheses(result.scored));
  if (!result.audit.empty()) {
    detail::write_file((dir / "mapping_audit.tsv").string(), format_audit(result.audit));
  }
}

std::string format_hypotheses(std::span<const ScoredUtterance> scored) {
  std::string out;
  for (const ScoredUtterance& u : scored) {
    for (const auto& [tier, syms] : u.hyp) {
      std::string line = u.utt_id + "\t" + std::string(to_string(tier)) + "\t";
      for (std::size_t i = 0; i < syms.size(); ++i) line += (i ? " " : "") + syms[i];
      out += line + "\n";
    }
  }
  return out;
}

std::map<std::string, TierHypotheses> parse_hypotheses(std::string_view text) {
  std::map<std::string, TierHypotheses> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split(line, '\t');
    if (f.size() != 3) {
      fail(ErrorCode::format_error, "hypotheses line " + std::to_string(line_no) + " needs 3 fields");
    }
    TierId tier;
    try {
      tier = parse_tier_id(f[1]);
    } catch (const Error& e) {
      fail(ErrorCode::format_error, "hypotheses line " + std::to_string(line_no) + ": " + e.what());
    }
    auto& slot = out[f[0]][tier];
    slot = detail::split_ws(f[2]);
  }
  return out;
}

std::vector<ScoredUtterance> score_hypotheses(const Manifest& manifest, std::string_view split,
                                              const std::map<std::string, TierHypotheses>& hyps,
                                              const ModelVariant& variant) {
  Manifest selected;
  for (const auto& r : manifest.records)
    if (split.empty() || r.split == split) selected.records.push_back(r);
  std::vector<ScoredUtterance> out;
  for (const TokenizedUtterance& u : tokenize_manifest(selected)) {
    auto it = hyps.find(u.utt_id);
    if (it == hyps.end()) fail(ErrorCode::format_error, "no hypotheses for '" + u.utt_id + "'");
    out.push_back({u.utt_id, u.lang, reference_tiers(u, variant), it->second});
  }
  return out;
}

}  // namespace tonetier
