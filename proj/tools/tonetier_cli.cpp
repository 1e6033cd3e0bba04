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

// tonetier command-line tool: synthetic corpora, pipeline stages and whole
// experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "text_util.hpp"
#include "tonetier/error.hpp"
#include "tonetier/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tonetier;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kData = 3, kTraining = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::spec_invalid:
      return kConfig;
    case ErrorCode::input_too_short:
    case ErrorCode::dim_mismatch:
    case ErrorCode::missing_head:
    case ErrorCode::missing_tier:
    case ErrorCode::unresolvable:
      return kTraining;
    default:
      return kData;
  }
}

std::string base_dir(const std::string& manifest_path) {
  const fs::path parent = fs::path(manifest_path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

Dataset load_dataset(const std::string& manifest_path, bool with_f0) {
  return Dataset::load(Manifest::read(manifest_path), base_dir(manifest_path), with_f0);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string spec, out;
};

int run_synth(const SynthArgs& a) {
  SynthCorpusSpec spec =
      a.spec.empty() ? SynthCorpusSpec::defaults(a.seed) : SynthCorpusSpec::parse(detail::read_file(a.spec));
  spec.seed = a.seed;
  const Manifest m = write_synth_corpus(spec, a.out);
  std::cout << "wrote " << m.records.size() << " utterances to " << a.out << "\n";
  return kOk;
}

struct FeaturizeArgs {
  std::string manifest, out;
  bool with_f0 = false;
};

int run_featurize(const FeaturizeArgs& a) {
  const Manifest in = Manifest::read(a.manifest);
  const Manifest out = featurize_to_dir(in, base_dir(a.manifest), a.out, a.with_f0);
  std::cout << "featurized " << out.records.size() << " utterances into " << a.out << "\n";
  return kOk;
}

struct PrepareArgs {
  std::string manifest, out;
  int variant = 1;
};

int run_prepare(const PrepareArgs& a) {
  const Manifest m = Manifest::read(a.manifest);
  check_splits(m);
  const ModelVariant variant(a.variant);
  const auto utts = tokenize_manifest(m);
  std::map<TierId, std::string> files;
  for (const auto& u : utts) {
    for (const auto& [tier, t] : build_tiers(u.syllables, u.lang, variant)) {
      files[tier] += format_tier_line(u.utt_id, t.symbols) + "\n";
    }
  }
  fs::create_directories(a.out);
  for (const auto& [tier, text] : files) {
    detail::write_file((fs::path(a.out) / (std::string(to_string(tier)) + ".txt")).string(), text);
  }
  std::string alphabets;
  for (const auto& [key, alpha] : build_alphabets(utts, variant)) {
    alphabets += key.first + "\t" + std::string(to_string(key.second)) + "\t";
    for (std::size_t i = 0; i < alpha.symbols().size(); ++i) alphabets += (i ? " " : "") + alpha.symbols()[i];
    alphabets += "\n";
  }
  detail::write_file((fs::path(a.out) / "alphabets.tsv").string(), alphabets);
  std::cout << "wrote " << files.size() << " tier files for " << utts.size() << " utterances\n";
  return kOk;
}

struct TrainArgs {
  std::string manifest, out, train_config;
  std::uint64_t seed = 0;
  std::vector<std::string> languages;
  bool with_f0 = false;
  int variant = 1, hidden_dim = 64, fc_dim = 64, max_epochs = 200, patience = 10, batch_size = 8;
  double learning_rate = 0.004;
};

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  TrainConfig cfg = a.train_config.empty() ? TrainConfig{} : TrainConfig::parse(detail::read_file(a.train_config));
  auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  if (given("--variant")) cfg.model.variant = a.variant;
  if (given("--hidden-dim")) cfg.model.hidden_dim = a.hidden_dim;
  if (given("--fc-dim")) cfg.model.fc_dim = a.fc_dim;
  if (given("--max-epochs")) cfg.max_epochs = a.max_epochs;
  if (given("--patience")) cfg.patience = a.patience;
  if (given("--batch-size")) cfg.batch_size = a.batch_size;
  if (given("--learning-rate")) cfg.optimizer.learning_rate = a.learning_rate;
  cfg.seed = a.seed;

  const Dataset data = load_dataset(a.manifest, a.with_f0);
  check_splits(data.manifest);
  ExperimentPlan plan;
  plan.variant = cfg.model.variant;
  plan.hidden_dim = cfg.model.hidden_dim;
  plan.fc_dim = cfg.model.fc_dim;
  plan.optimizer = cfg.optimizer;
  plan.max_epochs = cfg.max_epochs;
  plan.patience = cfg.patience;
  plan.batch_size = cfg.batch_size;
  plan.seed = cfg.seed;
  plan.train_languages = a.languages;
  const auto langs = plan_train_languages(data, plan);
  const Checkpoint ckpt = train_multilingual(data, plan, langs);
  ensure_parent(a.out);
  save_checkpoint(a.out, ckpt);
  std::cout << "trained " << ckpt.state.epoch << " epochs, best dev loss " << ckpt.state.best_dev_loss
            << " at epoch " << ckpt.state.best_epoch << "; saved " << a.out << "\n";
  return kOk;
}

struct PlanArgs {
  std::string plan_file, setting, adapt_language;
  std::uint64_t seed = 0;
  int variant = 1, adapt_utterances = 60, head_epochs = 20, full_epochs = 60;
  bool with_f0 = false;
};

ExperimentPlan load_plan(const PlanArgs& a, const CLI::App& cmd) {
  ExperimentPlan p = a.plan_file.empty() ? ExperimentPlan{} : ExperimentPlan::parse(detail::read_file(a.plan_file));
  auto given = [&](const char* name) {
    const CLI::Option* o = cmd.get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--setting")) p.setting = parse_setting(a.setting);
  if (given("--lang")) p.adapt_language = a.adapt_language;
  if (given("--seed")) p.seed = a.seed;
  if (given("--variant")) p.variant = a.variant;
  if (given("--utterances")) p.adapt_utterances = a.adapt_utterances;
  if (given("--head-epochs")) p.adapt_head_epochs = a.head_epochs;
  if (given("--full-epochs")) p.adapt_full_epochs = a.full_epochs;
  if (given("--f0")) p.with_f0 = a.with_f0;
  return p;
}

struct AdaptArgs {
  PlanArgs plan;
  std::string manifest, checkpoint, out, audit;
};

int run_adapt(const AdaptArgs& a, const CLI::App& cmd) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  ExperimentPlan plan = load_plan(a.plan, cmd);
  plan.setting = Setting::crosslingual;
  plan.variant = ckpt.model.variant().id();
  const Dataset data = load_dataset(a.manifest, plan.with_f0);
  check_splits(data.manifest);
  const auto audit = adapt_to_language(ckpt, data, plan);
  ensure_parent(a.out);
  save_checkpoint(a.out, ckpt);
  const std::string audit_path = a.audit.empty() ? a.out + ".mapping_audit.tsv" : a.audit;
  detail::write_file(audit_path, format_audit(audit));
  std::cout << "adapted to " << plan.adapt_language << " (" << audit.size() << " mapped symbols); saved "
            << a.out << "\n";
  return kOk;
}

struct DecodeArgs {
  std::string manifest, checkpoint, out, split = "test", lang;
  int beam = 25;
  double lm_weight = 0.1;
  bool with_f0 = false;
};

int run_decode(const DecodeArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset data = load_dataset(a.manifest, a.with_f0);
  const auto idx = data.select(a.lang, a.split);
  if (idx.empty()) fail(ErrorCode::data_empty, "no '" + a.split + "' records to decode");
  const auto scored = decode_dataset(ckpt, data, idx, DecodeOptions{a.beam, a.lm_weight});
  ensure_parent(a.out);
  detail::write_file(a.out, format_hypotheses(scored));
  std::cout << "decoded " << scored.size() << " utterances into " << a.out << "\n";
  return kOk;
}

struct ScoreArgs {
  std::string manifest, hyps, out, split = "test";
  int variant = 1;
};

int run_score(const ScoreArgs& a) {
  const Manifest m = Manifest::read(a.manifest);
  const auto hyps = parse_hypotheses(detail::read_file(a.hyps));
  Manifest scored_records;
  for (const auto& r : m.records)
    if (hyps.count(r.utt_id)) scored_records.records.push_back(r);
  const auto scored = score_hypotheses(scored_records, a.split, hyps, ModelVariant(a.variant));
  if (scored.empty()) fail(ErrorCode::data_empty, "no hypotheses match '" + a.split + "' records");
  const auto rows = build_report(scored, ModelVariant(a.variant));
  if (a.out.empty()) {
    std::cout << report_csv(rows);
  } else {
    ensure_parent(a.out);
    detail::write_file(a.out, report_csv(rows));
    std::cout << report_table(rows);
  }
  return kOk;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string csv;
};

int run_report(const ReportArgs& a) {
  std::vector<ReportRow> rows;
  for (const auto& path : a.inputs) {
    const auto r = parse_report_csv(detail::read_file(path));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (!a.csv.empty()) detail::write_file(a.csv, report_csv(rows));
  std::cout << report_table(rows);
  return kOk;
}

struct RunArgs {
  PlanArgs plan;
  std::string manifest, out;
};

int run_run(const RunArgs& a, const CLI::App& cmd) {
  const ExperimentPlan plan = load_plan(a.plan, cmd);
  const Dataset data = load_dataset(a.manifest, plan.with_f0);
  const ExperimentResult r = run_experiment(data, plan);
  write_experiment(r, a.out);
  fs::create_directories(a.out);
  detail::write_file((fs::path(a.out) / "plan.cfg").string(), plan.serialize());
  std::cout << report_table(r.report);
  return kOk;
}

void add_plan_options(CLI::App* cmd, PlanArgs& p) {
  cmd->add_option("--plan", p.plan_file, "Experiment plan (key=value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", p.seed, "Random seed");
  cmd->add_option("--variant", p.variant, "Model variant 1-4")->check(CLI::Range(1, 4));
  cmd->add_option("--utterances", p.adapt_utterances, "Adaptation utterances");
  cmd->add_option("--head-epochs", p.head_epochs, "Heads-only adaptation epochs");
  cmd->add_option("--full-epochs", p.full_epochs, "Full fine-tuning epochs");
  cmd->add_flag("--f0", p.with_f0, "Append F0 when featurizing audio");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tier CTC modeling of phones and tones"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic multilingual corpus");
  c_synth->add_option("--seed", synth.seed, "Random seed")->required();
  c_synth->add_option("--spec", synth.spec, "Corpus spec (JSON)")->check(CLI::ExistingFile);
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "Compute normalized features for a manifest");
  c_feat->add_option("--manifest", feat.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_feat->add_option("--out", feat.out, "Output directory")->required();
  c_feat->add_flag("--f0", feat.with_f0, "Append the Mel-scaled F0 column");

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Write tier transcripts and alphabets");
  c_prep->add_option("--manifest", prep.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_prep->add_option("--variant", prep.variant, "Model variant 1-4")->check(CLI::Range(1, 4));
  c_prep->add_option("--out", prep.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a multilingual model");
  c_train->add_option("--manifest", tr.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_train->add_option("--seed", tr.seed, "Random seed")->required();
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--train-config", tr.train_config, "Training config (key=value)")->check(CLI::ExistingFile);
  c_train->add_option("--languages", tr.languages, "Training languages (default: all)")->delimiter(',');
  c_train->add_option("--variant", tr.variant, "Model variant 1-4")->check(CLI::Range(1, 4));
  c_train->add_option("--hidden-dim", tr.hidden_dim, "LSTM units per direction");
  c_train->add_option("--fc-dim", tr.fc_dim, "Fully-connected layer size");
  c_train->add_option("--max-epochs", tr.max_epochs, "Maximum epochs");
  c_train->add_option("--patience", tr.patience, "Early-stopping patience");
  c_train->add_option("--batch-size", tr.batch_size, "Utterances per batch");
  c_train->add_option("--learning-rate", tr.learning_rate, "Adadelta learning rate");
  c_train->add_flag("--f0", tr.with_f0, "Append F0 when featurizing audio");

  AdaptArgs ad;
  auto* c_adapt = app.add_subcommand("adapt", "Transfer a trained model to a new language");
  c_adapt->add_option("--manifest", ad.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_adapt->add_option("--checkpoint", ad.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  c_adapt->add_option("--lang", ad.plan.adapt_language, "Adaptation language")->required();
  c_adapt->add_option("--out", ad.out, "Adapted checkpoint path")->required();
  c_adapt->add_option("--audit", ad.audit, "Mapping audit path (default: <out>.mapping_audit.tsv)");
  add_plan_options(c_adapt, ad.plan);

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Decode a split with a checkpoint");
  c_dec->add_option("--manifest", dec.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--checkpoint", dec.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--out", dec.out, "Hypotheses file")->required();
  c_dec->add_option("--split", dec.split, "Split to decode")->check(CLI::IsMember({"train", "dev", "test"}));
  c_dec->add_option("--lang", dec.lang, "Only this language");
  c_dec->add_option("--beam", dec.beam, "Beam width")->check(CLI::PositiveNumber);
  c_dec->add_option("--lm-weight", dec.lm_weight, "Bigram LM weight");
  c_dec->add_flag("--f0", dec.with_f0, "Append F0 when featurizing audio");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Score hypotheses against the manifest");
  c_score->add_option("--manifest", sc.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_score->add_option("--hyps", sc.hyps, "Hypotheses file")->required()->check(CLI::ExistingFile);
  c_score->add_option("--variant", sc.variant, "Model variant 1-4")->check(CLI::Range(1, 4));
  c_score->add_option("--split", sc.split, "Split to score")->check(CLI::IsMember({"train", "dev", "test"}));
  c_score->add_option("--out", sc.out, "Report CSV (default: stdout)");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Tabulate one or more report CSVs");
  c_rep->add_option("inputs", rep.inputs, "Report CSV files")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--csv", rep.csv, "Also write the combined CSV here");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run a whole experiment plan");
  c_run->add_option("--manifest", run.manifest, "Manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  c_run->add_option("--out", run.out, "Output directory")->required();
  c_run->add_option("--setting", run.plan.setting, "multilingual, cross-lingual or monolingual");
  c_run->add_option("--lang", run.plan.adapt_language, "Adaptation language");
  add_plan_options(c_run, run.plan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  const std::string stage = cmd->get_name();
  try {
    if (cmd == c_synth) return run_synth(synth);
    if (cmd == c_feat) return run_featurize(feat);
    if (cmd == c_prep) return run_prepare(prep);
    if (cmd == c_train) return run_train(tr, *c_train);
    if (cmd == c_adapt) return run_adapt(ad, *c_adapt);
    if (cmd == c_dec) return run_decode(dec);
    if (cmd == c_score) return run_score(sc);
    if (cmd == c_rep) return run_report(rep);
    if (cmd == c_run) return run_run(run, *c_run);
  } catch (const Error& e) {
    std::cerr << "tonetier " << stage << ": error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "tonetier " << stage << ": error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "tonetier " << stage << ": internal error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
