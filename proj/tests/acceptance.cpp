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

// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 1 2 9`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "metrics_fixture.hpp"
#include "tone_inventory_fixture.hpp"
#include "text_util.hpp"
#include "tonetier/ctc.hpp"
#include "tonetier/error.hpp"
#include "tonetier/pipeline.hpp"

using namespace tonetier;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;
using Syms = std::vector<std::string>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Matrix random_logits(std::mt19937_64& rng, int n, int classes, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(n, classes);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

LabelSequence random_ref(std::mt19937_64& rng, int max_len, int labels) {
  LabelSequence r(rng() % (max_len + 1));
  for (auto& l : r) l = 1 + static_cast<int>(rng() % labels);
  return r;
}

// 1. Forward-backward against path enumeration.
Outcome ctc_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0;
  int infeasible = 0, mismatched_support = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int labels = 1 + static_cast<int>(rng() % 3);
    const Matrix logits = random_logits(rng, n, labels + 1, 2.0);
    const LabelSequence ref = random_ref(rng, 3, labels);
    const double fb = ctc_loss(logits, ref, false).loss;
    const double bf = brute_force_ctc(logits, ref);
    if (std::isinf(bf) || std::isinf(fb)) {
      ++infeasible;
      if (std::isinf(bf) != std::isinf(fb)) ++mismatched_support;
      continue;
    }
    worst = std::max(worst, std::abs(fb - bf) / std::max(std::abs(bf), 1e-300));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && mismatched_support == 0 && t < 10,
          "1000 instances (" + std::to_string(infeasible) + " unalignable, " +
              std::to_string(mismatched_support) + " disagreeing), max rel err " + fmt("%.2e", worst) +
              ", " + fmt("%.2f", t) + " s"};
}

// 2. Analytic CTC gradient against central differences.
Outcome ctc_gradient() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  const double h = 1e-5, floor = 1e-6;
  double worst = 0;
  int instances = 0;
  long entries = 0;
  while (instances < 100) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int labels = 1 + static_cast<int>(rng() % 4);
    const Matrix logits = random_logits(rng, n, labels + 1, 2.0);
    const LabelSequence ref = random_ref(rng, 3, labels);
    if (min_frames(ref) > n) continue;
    ++instances;
    const CtcResult r = ctc_loss(logits, ref);
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k <= labels; ++k) {
        Matrix plus = logits, minus = logits;
        plus(t, k) += h;
        minus(t, k) -= h;
        const double num = (ctc_loss(plus, ref, false).loss - ctc_loss(minus, ref, false).loss) / (2 * h);
        const double ana = r.gradient(t, k);
        worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), floor}));
        ++entries;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 30, "100 instances, " + std::to_string(entries) +
                                       " entries, max rel err " + fmt("%.2e", worst) + ", " +
                                       fmt("%.2f", t) + " s"};
}

AlphabetSet tiny_alphabets(const ModelVariant& v) {
  AlphabetSet a;
  auto add = [&](TierId t, Syms s) {
    if (v.has(t)) a.emplace(AlphabetKey{"xx", t}, TierAlphabet(t, "xx", std::move(s)));
  };
  add(TierId::joint, {"a5", "k"});
  add(TierId::phone, {"a", "k"});
  add(TierId::tone, tone_alphabet(v.tone_mode()).symbols());
  add(TierId::voice, voice_alphabet().symbols());
  return a;
}

// 3. Every parameter of a tiny model against central differences.
Outcome model_gradient() {
  const auto t0 = Clock::now();
  const double h = 1e-5, floor = 1e-6;
  double worst = 0;
  long checked = 0;
  for (int variant = 1; variant <= 4; ++variant) {
    const ModelVariant v(variant);
    const AlphabetSet a = tiny_alphabets(v);
    AcousticModel<double> m(ModelConfig{8, 4, 8, variant}, a, 100 + variant);
    Example ex;
    ex.lang = "xx";
    std::mt19937_64 rng(variant);
    std::normal_distribution<float> g;
    ex.features = MatrixF(12, 8);
    for (Eigen::Index i = 0; i < ex.features.size(); ++i) ex.features.data()[i] = g(rng);
    for (const auto& [key, alpha] : a) {
      Syms ref;
      switch (key.second) {
        case TierId::joint: ref = {"k", "a5"}; break;
        case TierId::phone: ref = {"k", "a"}; break;
        case TierId::tone: ref = variant == 4 ? Syms{"˧", "˥", "<boundary>"} : Syms{"˥", "<boundary>"}; break;
        case TierId::voice: ref = {"<modal>", "<boundary>"}; break;
      }
      ex.labels[key.second] = alpha.encode(ref);
    }
    auto grads = m.zero_like();
    if (!m.loss(ex, &grads).feasible) return {false, "tiny example is not alignable"};
    for (auto& [name, p] : m.params()) {
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double keep = p.data()[i];
        p.data()[i] = keep + h;
        const double lp = m.loss(ex).total;
        p.data()[i] = keep - h;
        const double lm = m.loss(ex).total;
        p.data()[i] = keep;
        const double num = (lp - lm) / (2 * h);
        const double ana = grads.at(name).data()[i];
        worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), floor}));
        ++checked;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-3 && t < 120, "models 1-4, " + std::to_string(checked) +
                                        " parameters, max rel err " + fmt("%.2e", worst) + ", " +
                                        fmt("%.2f", t) + " s"};
}

// 4. Tier laws on a 1000-utterance synthetic corpus.
Outcome tier_laws() {
  SynthCorpusSpec spec = SynthCorpusSpec::defaults(4);
  spec.min_phone_frames = spec.max_phone_frames = 1;
  for (auto& l : spec.languages) {
    l.train = 210;
    l.dev = 20;
    l.test = 20;
  }
  Manifest m;
  for (const auto& u : synth_corpus(spec)) m.records.push_back(u.record);
  const auto utts = tokenize_manifest(m);
  const std::set<std::string> voice = {"ʔ", "h", "<modal>", "<boundary>"};
  int bad4 = 0, bad23 = 0, bad_voice = 0;
  for (const auto& u : utts) {
    const std::size_t syl = u.syllables.size();
    const auto m4 = build_tiers(u.syllables, u.lang, ModelVariant(4));
    if (m4.at(TierId::tone).symbols.size() != 3 * syl) ++bad4;
    for (const auto& s : m4.at(TierId::voice).symbols)
      if (!voice.count(s)) {
        ++bad_voice;
        break;
      }
    for (int variant : {2, 3}) {
      const auto t = build_tiers(u.syllables, u.lang, ModelVariant(variant)).at(TierId::tone).symbols;
      if (static_cast<std::size_t>(std::count(t.begin(), t.end(), "<boundary>")) != syl) ++bad23;
    }
  }
  const bool ok = utts.size() == 1000 && bad4 == 0 && bad23 == 0 && bad_voice == 0 &&
                  voice_alphabet().symbols().size() == 4;
  return {ok, std::to_string(utts.size()) + " utterances; violations: model-4 length " +
                  std::to_string(bad4) + ", model-2/3 boundaries " + std::to_string(bad23) +
                  ", voice alphabet " + std::to_string(bad_voice)};
}

// 5. Hand-transcribed tone inventories and the model-4 normalization examples.
Outcome tone_inventory() {
  int rows = 0, bad = 0;
  std::map<std::string, int> per_lang;
  for (const auto& row : fixtures::tone_inventory()) {
    ++rows;
    ++per_lang[row.lang];
    const auto syl = tokenize_ipa(row.syllable, Inventory::builtin(row.lang));
    const bool ok = build_joint_tier(syl, row.lang).symbols == Syms{row.joint} &&
                    build_tone_tier(syl, ToneMode::models23).symbols == row.tone23 &&
                    build_tone_tier(syl, ToneMode::model4).symbols == row.tone4 &&
                    build_voice_tier(syl, row.lang, false).symbols == row.voice4;
    if (!ok) ++bad;
  }
  auto L = [](int level) { return ToneTarget::pitch(level); };
  const auto a = normalize_tone_m4(std::vector{L(22), L(11), L(44)});
  const auto b = normalize_tone_m4(std::vector{L(55)});
  const auto c = normalize_tone_m4(std::vector{L(33), ToneTarget::glottal(), L(55)});
  const bool examples = a.targets[0] == L(22) && a.targets[1] == L(11) && a.voice == "<modal>" &&
                        b.targets[0] == L(55) && b.targets[1] == L(55) && c.targets[0] == L(33) &&
                        c.targets[1] == L(55) && c.voice == "ʔ";
  const bool counts = per_lang["man"] == 4 && per_lang["can"] == 6 && per_lang["vie"] == 6 &&
                      per_lang["lao"] == 6;
  return {bad == 0 && examples && counts,
          std::to_string(rows) + " tones (4+6+6+6), " + std::to_string(bad) + " mismatched; normalization examples " +
              (examples ? "ok" : "WRONG")};
}

// 6. Head initialization means and cascade coverage.
Outcome head_init() {
  AlphabetSet trained;
  for (const TierAlphabet& a :
       {TierAlphabet(TierId::joint, "l1", {"a5", "i3", "k", "t"}),
        TierAlphabet(TierId::joint, "l2", {"a5", "k", "uː35", "uː5", "uː51"}),
        TierAlphabet(TierId::joint, "l3", {"a5", "p", "ɑʊ15", "ɑʊ35", "ɑʊ5"})}) {
    trained.emplace(AlphabetKey{a.lang(), a.tier()}, a);
  }
  AcousticModel<float> model(ModelConfig{6, 4, 16, 1}, trained, 6);
  const AcousticModel<float> before = model;
  const AlphabetSet target = {
      {{"new", TierId::joint},
       TierAlphabet(TierId::joint, "new", {"a5", "b", "k", "tʰ", "uː13", "ɑo13"})}};
  const auto audit = init_language_heads(model, target);

  // Expected rows by hand: symbol -> (language, source symbol) contributors.
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>> expect = {
      {"", {{"l1", ""}, {"l2", ""}, {"l3", ""}}},
      {"a5", {{"l1", "a5"}, {"l2", "a5"}, {"l3", "a5"}}},
      {"b", {{"l3", "p"}}},
      {"k", {{"l1", "k"}, {"l2", "k"}}},
      {"tʰ", {{"l1", "t"}}},
      {"uː13", {{"l2", "uː35"}}},
      {"ɑo13", {{"l3", "ɑʊ15"}}},
  };
  double worst = 0;
  for (const auto& [sym, src] : expect) {
    const int row = sym.empty() ? 0 : model.alphabet("new", TierId::joint).index_of(sym);
    for (const char* part : {"w", "b"}) {
      const auto& got = model.params().at(head_param_name("new", TierId::joint, part));
      const Eigen::Index cols = std::string(part) == "w" ? got.cols() : 1;
      for (Eigen::Index c = 0; c < cols; ++c) {
        double sum = 0;
        for (const auto& [lang, s] : src) {
          const int idx = s.empty() ? 0 : before.alphabet(lang, TierId::joint).index_of(s);
          const auto& p = before.params().at(head_param_name(lang, TierId::joint, part));
          sum += std::string(part) == "w" ? p(idx, c) : p(0, idx);
        }
        const float mean = static_cast<float>(sum / static_cast<double>(src.size()));
        const float value = std::string(part) == "w" ? got(row, c) : got(0, row);
        worst = std::max(worst, static_cast<double>(std::abs(value - mean)));
      }
    }
  }
  std::set<Resolution> fired;
  bool pairing = false;
  for (const auto& m : audit) {
    fired.insert(m.resolution);
    if (m.resolution == Resolution::joint_two_stage && m.phone_stage == MatchKind::feature) {
      fired.insert(Resolution::feature);
    }
    if (m.target == "uː13" && m.source == "uː35") pairing = true;
  }
  const bool branches = fired.count(Resolution::exact) && fired.count(Resolution::diacritic) &&
                        fired.count(Resolution::feature) && fired.count(Resolution::joint_two_stage);
  return {worst == 0 && branches && pairing,
          "max |row - hand mean| " + fmt("%.1e", worst) + "; branches " + std::to_string(fired.size()) +
              "/4" + (pairing ? ", uː˩˧ -> uː˧˥" : ", uː˩˧ pairing missing")};
}

Dataset in_memory_dataset(const std::vector<SynthUtterance>& corpus) {
  Dataset d;
  for (const auto& u : corpus) {
    d.manifest.records.push_back(u.record);
    d.features.push_back({u.features, u.record.utt_id, u.record.speaker_id});
  }
  znorm_per_speaker(d.features);
  d.utterances = tokenize_manifest(d.manifest);
  return d;
}

double rate_of(const std::vector<ReportRow>& rows, const std::string& metric) {
  for (const auto& r : rows)
    if (r.metric == metric && r.language == "all") return r.counts.rate();
  return NAN;
}

// 7. Overfitting 32 utterances with model 1.
Outcome overfit() {
  const auto t0 = Clock::now();
  SynthCorpusSpec spec = SynthCorpusSpec::defaults(7);
  spec.languages.resize(1);
  spec.languages[0].train = 32;
  spec.languages[0].dev = 0;
  spec.languages[0].test = 0;
  const Dataset data = in_memory_dataset(synth_corpus(spec));
  const ModelVariant v(1);
  const auto idx = data.select("", "train");
  const AlphabetSet alph = dataset_alphabets(data, idx, v);
  const auto ex = make_examples(data, idx, alph, v);
  Checkpoint ckpt{AcousticModel<float>(ModelConfig{data.feature_dim(), 64, 64, 1}, alph, 7),
                  Adadelta(OptimizerConfig{1.0, 0.95, 1e-6}), {}, {}};
  ckpt.lms = train_language_models(ex, alph);
  double jer = NAN;
  int epochs = 0;
  TrainOptions o;
  o.max_epochs = 200;
  o.batch_size = 8;
  o.seed = 7;
  o.on_epoch = [&](const EpochReport& r) {
    epochs = r.epoch;
    if (r.epoch % 10 != 0) return true;
    std::vector<ScoredUtterance> scored;
    const auto hyps = evaluate(ckpt, ex);
    for (std::size_t i = 0; i < ex.size(); ++i) {
      const auto& u = data.utterances[idx[i]];
      scored.push_back({u.utt_id, u.lang, reference_tiers(u, v), hyps[i]});
    }
    jer = rate_of(build_report(scored, v), "JER");
    return jer > 10.0;
  };
  train(ckpt.model, ckpt.optimizer, ex, {}, o);
  const double t = seconds_since(t0);
  return {jer <= 10.0 && t < 600, "training JER " + fmt("%.2f", jer) + "% after " + std::to_string(epochs) +
                                      " epochs, " + fmt("%.1f", t) + " s"};
}

// 8. Cross-lingual transfer against a small monolingual model.
Outcome crosslingual() {
  const auto t0 = Clock::now();
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthCorpusSpec spec = SynthCorpusSpec::defaults(seed);
    spec.max_phone_frames = 20;
    for (auto& l : spec.languages) {
      l.train = 80;
      l.dev = 20;
      l.test = 20;
    }
    spec.languages.back().train = 60;
    const Dataset data = in_memory_dataset(synth_corpus(spec));
    ExperimentPlan p;
    p.adapt_language = spec.languages.back().name;
    p.adapt_utterances = 60;
    p.seed = seed;
    p.max_epochs = 40;
    p.setting = Setting::crosslingual;
    const double cross = rate_of(run_experiment(data, p).report, "JER");
    p.setting = Setting::monolingual;
    const double mono = rate_of(run_experiment(data, p).report, "JER");
    if (cross < mono) ++wins;
    per_seed += (seed > 1 ? "; " : "") + fmt("%.2f", cross) + " vs " + fmt("%.2f", mono);
    std::fprintf(stderr, "  seed %d: cross-lingual JER %.2f, monolingual JER %.2f (%.0f s)\n",
                 static_cast<int>(seed), cross, mono, seconds_since(t0));
  }
  const double t = seconds_since(t0);
  return {wins >= 4 && t < 1800, std::to_string(wins) + "/5 seeds (JER cross vs mono: " + per_seed + "), " +
                                     fmt("%.0f", t) + " s"};
}

// 9. Hand-scored metric fixtures and report layouts.
Outcome metrics_fixtures() {
  int bad = 0;
  for (const auto& h : fixtures::hand_scored()) {
    const Syms pr = phones_from_joint(h.ref), ph = phones_from_joint(h.hyp);
    if (!(edit_distance(pr, ph) == h.per)) ++bad;
    if (!(filtered_counts(pr, ph, is_consonant_segment) == h.coer)) ++bad;
    if (!(filtered_counts(pr, ph, is_vowel_segment) == h.voer)) ++bad;
    if (!(edit_distance(tones_from_joint(h.ref), tones_from_joint(h.hyp)) == h.ter)) ++bad;
  }
  const auto m2 = report_metrics(ModelVariant(2));
  const auto m4 = report_metrics(ModelVariant(4));
  const bool no_jer = std::find(m2.begin(), m2.end(), "JER") == m2.end();
  const bool has_ver = std::find(m4.begin(), m4.end(), "VER") != m4.end();
  return {bad == 0 && no_jer && has_ver,
          std::to_string(fixtures::hand_scored().size()) + " pairs x 4 metrics, " + std::to_string(bad) +
              " mismatches; model-2 JER " + (no_jer ? "absent" : "PRESENT") + ", model-4 VER " +
              (has_ver ? "present" : "ABSENT")};
}

// 10. Same seed, byte-identical reports from the full file-based pipeline.
Outcome determinism() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / ("tonetier_accept_" + std::to_string(::getpid()));
  auto run = [&](const std::string& tag) {
    const fs::path dir = root / tag;
    SynthCorpusSpec spec = SynthCorpusSpec::defaults(10);
    spec.max_syllables = 4;
    spec.max_phone_frames = 14;
    for (auto& l : spec.languages) {
      l.train = 24;
      l.dev = 6;
      l.test = 6;
    }
    write_synth_corpus(spec, (dir / "corpus").string());
    const Manifest m = Manifest::read((dir / "corpus" / "manifest.jsonl").string());
    const Dataset data = Dataset::load(m, (dir / "corpus").string(), false);
    ExperimentPlan p;
    p.setting = Setting::crosslingual;
    p.variant = 4;
    p.adapt_language = "lao";
    p.adapt_utterances = 16;
    p.seed = 10;
    p.hidden_dim = p.fc_dim = 16;
    p.max_epochs = 4;
    p.adapt_head_epochs = p.adapt_full_epochs = 2;
    write_experiment(run_experiment(data, p), (dir / "out").string());
    std::string bytes;
    for (const char* f : {"report.csv", "report.txt", "hypotheses.tsv", "mapping_audit.tsv", "model.ckpt"}) {
      bytes += detail::read_file((dir / "out" / f).string());
    }
    return std::pair(detail::read_file((dir / "out" / "report.csv").string()), bytes);
  };
  const auto a = run("a");
  const auto b = run("b");
  fs::remove_all(root);
  const double t = seconds_since(t0);
  return {a == b && !a.first.empty(), std::string(a.first == b.first ? "reports identical" : "reports DIFFER") +
                                         ", all artifacts " + (a.second == b.second ? "identical" : "DIFFER") +
                                         " (" + std::to_string(a.second.size()) + " bytes), " + fmt("%.1f", t) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"CTC oracle equivalence", ctc_oracle},
      {"CTC gradient check", ctc_gradient},
      {"end-to-end gradient check", model_gradient},
      {"tier laws", tier_laws},
      {"tone inventory fixture", tone_inventory},
      {"head initialization exactness", head_init},
      {"overfit", overfit},
      {"cross-lingual beats monolingual", crosslingual},
      {"metrics fixtures", metrics_fixtures},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
