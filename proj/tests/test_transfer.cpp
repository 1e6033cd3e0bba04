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

#include <random>

#include "doctest.h"
#include "tonetier/error.hpp"
#include "tonetier/transfer.hpp"

using namespace tonetier;

namespace {

TierAlphabet joint(const std::string& lang, std::vector<std::string> symbols) {
  return TierAlphabet(TierId::joint, lang, std::move(symbols));
}

TierAlphabet phone(const std::string& lang, std::vector<std::string> symbols) {
  return TierAlphabet(TierId::phone, lang, std::move(symbols));
}

std::vector<ToneTarget> tones_of(const std::string& joint_symbol) {
  return split_joint_symbol(joint_symbol).tones;
}

// Three trained languages sharing a small model-1 encoder.
AcousticModel<float> three_language_model() {
  AlphabetSet set;
  for (const TierAlphabet& a : {joint("l1", {"a5", "i3", "k", "t"}),
                                joint("l2", {"a5", "k", "uː35", "uː5"}),
                                joint("l3", {"a5", "p", "uː51", "ɑʊ15", "ɑʊ35", "ɑʊ5"})}) {
    set.emplace(AlphabetKey{a.lang(), a.tier()}, a);
  }
  return AcousticModel<float>(ModelConfig{6, 4, 5, 1}, set, 7);
}

Eigen::RowVectorXd row(const AcousticModel<float>& m, const std::string& lang, const char* part,
                       const std::string& symbol) {
  const int idx = symbol.empty() ? 0 : m.alphabet(lang, TierId::joint).index_of(symbol);
  REQUIRE(idx >= 0);
  const auto& p = m.params().at(head_param_name(lang, TierId::joint, part));
  return std::string(part) == "w" ? Eigen::RowVectorXd(p.row(idx).cast<double>())
                                  : Eigen::RowVectorXd::Constant(1, p(0, idx));
}

std::vector<Example> random_examples(const AcousticModel<float>& m, const std::string& lang, int n,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  const int c = static_cast<int>(m.alphabet(lang, TierId::joint).size());
  std::vector<Example> out;
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.utt_id = lang + std::to_string(i);
    ex.lang = lang;
    ex.features = MatrixF(16, m.config().input_dim);
    for (Eigen::Index k = 0; k < ex.features.size(); ++k) ex.features.data()[k] = g(rng);
    ex.labels[TierId::joint] = {1 + static_cast<int>(rng() % (c - 1)),
                                1 + static_cast<int>(rng() % (c - 1))};
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("tone distance") {
  CHECK(tone_distance(tones_of("a13"), tones_of("a35")) == 4);
  CHECK(tone_distance(tones_of("a13"), tones_of("a5")) == 6);
  CHECK(tone_distance(tones_of("a13"), tones_of("a15")) == 2);
  CHECK(tone_distance(tones_of("a214"), tones_of("a21")) == 3);
  CHECK(tone_distance(tones_of("a"), tones_of("a3")) == 0);
  CHECK(tone_distance(tones_of("a32ʔ"), tones_of("a32")) == 0);
  CHECK(tone_distance(tones_of("a51"), tones_of("a15")) == 8);
}

TEST_CASE("exact resolution lists every holder") {
  const std::vector<TierAlphabet> training = {phone("man", {"a", "k"}), phone("can", {"k", "ɔ"}),
                                              phone("vie", {"a", "ɗ"})};
  const SymbolMapping m = resolve_symbol("a", TierId::phone, training);
  CHECK(m.resolution == Resolution::exact);
  CHECK(m.source == "a");
  CHECK(m.contributors == std::vector<std::string>{"man", "vie"});
}

TEST_CASE("cascade priority: exact over diacritic over feature-nearest") {
  const std::vector<TierAlphabet> training = {phone("x", {"p", "t", "a"}), phone("y", {"pʰ", "i"})};
  CHECK(resolve_symbol("pʰ", TierId::phone, training).resolution == Resolution::exact);
  const SymbolMapping d = resolve_symbol("tʰ", TierId::phone, training);
  CHECK(d.resolution == Resolution::diacritic);
  CHECK(d.source == "t");
  CHECK(d.contributors == std::vector<std::string>{"x"});
  const SymbolMapping f = resolve_symbol("b", TierId::phone, training);
  CHECK(f.resolution == Resolution::feature);
  CHECK(f.source == "p");
  CHECK(resolve_symbol("u", TierId::phone, training).resolution == Resolution::feature);
  // deterministic
  CHECK(resolve_symbol("b", TierId::phone, training).source == f.source);
}

TEST_CASE("joint two-stage examples") {
  const std::vector<TierAlphabet> uu = {joint("vie", {"uː5", "uː51"}), joint("lao", {"uː35", "k"})};
  const SymbolMapping a = resolve_symbol("uː13", TierId::joint, uu);
  CHECK(a.resolution == Resolution::joint_two_stage);
  CHECK(a.phone_stage == MatchKind::exact);
  CHECK(a.source == "uː35");
  CHECK(a.contributors == std::vector<std::string>{"lao"});

  const std::vector<TierAlphabet> ao = {joint("man", {"ɑʊ15", "ɑʊ5", "ɑʊ35", "t"})};
  const SymbolMapping b = resolve_symbol("ɑo13", TierId::joint, ao);
  CHECK(b.resolution == Resolution::joint_two_stage);
  CHECK(b.phone_stage == MatchKind::feature);
  CHECK(b.source == "ɑʊ15");

  // bare consonants use the one-stage phone cascade
  const SymbolMapping c = resolve_symbol("tʰ", TierId::joint, ao);
  CHECK(c.resolution == Resolution::diacritic);
  CHECK(c.source == "t");
}

TEST_CASE("universal tiers resolve exactly or not at all") {
  const std::vector<TierAlphabet> tones = {TierAlphabet(TierId::tone, "x", {"˥", "<boundary>"})};
  CHECK(resolve_symbol("˥", TierId::tone, tones).resolution == Resolution::exact);
  try {
    resolve_symbol("˩", TierId::tone, tones);
    FAIL("expected Unresolvable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unresolvable);
  }
}

TEST_CASE("no same-category candidate is unresolvable") {
  const std::vector<TierAlphabet> vowels_only = {phone("x", {"a", "i"})};
  try {
    resolve_symbol("k", TierId::phone, vowels_only);
    FAIL("expected Unresolvable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unresolvable);
  }
}

TEST_CASE("head initialization equals hand-computed means") {
  AcousticModel<float> model = three_language_model();
  const AlphabetSet target = {
      {{"new", TierId::joint},
       joint("new", {"a5", "b", "k", "tʰ", "uː13", "uː5", "ɑo13", "ɑʊ15"})}};
  const std::vector<SymbolMapping> audit = init_language_heads(model, target);
  REQUIRE(audit.size() == 8);

  std::map<std::string, const SymbolMapping*> by;
  for (const auto& m : audit) by[m.target] = &m;
  CHECK(by["a5"]->resolution == Resolution::exact);
  CHECK(by["b"]->resolution == Resolution::feature);
  CHECK(by["b"]->source == "p");
  CHECK(by["tʰ"]->resolution == Resolution::diacritic);
  CHECK(by["uː13"]->resolution == Resolution::joint_two_stage);
  CHECK(by["uː13"]->source == "uː35");
  CHECK(by["ɑo13"]->source == "ɑʊ15");

  auto new_row = [&](const std::string& sym, const char* part) {
    return row(model, "new", part, sym);
  };
  auto mean = [&](const std::vector<std::pair<std::string, std::string>>& src, const char* part) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(row(model, src[0].first, part, src[0].second).size());
    for (const auto& [lang, sym] : src) s += row(model, lang, part, sym);
    return Eigen::RowVectorXd(s / static_cast<double>(src.size()));
  };
  const double tol = 1e-6;  // one float rounding of a double mean
  for (const char* part : {"w", "b"}) {
    CAPTURE(part);
    CHECK((new_row("", part) - mean({{"l1", ""}, {"l2", ""}, {"l3", ""}}, part)).cwiseAbs().maxCoeff() < tol);
    CHECK((new_row("a5", part) - mean({{"l1", "a5"}, {"l2", "a5"}, {"l3", "a5"}}, part)).cwiseAbs().maxCoeff() < tol);
    CHECK((new_row("k", part) - mean({{"l1", "k"}, {"l2", "k"}}, part)).cwiseAbs().maxCoeff() < tol);
    CHECK((new_row("b", part) - row(model, "l3", part, "p")).cwiseAbs().maxCoeff() == 0);
    CHECK((new_row("tʰ", part) - row(model, "l1", part, "t")).cwiseAbs().maxCoeff() == 0);
    CHECK((new_row("uː13", part) - row(model, "l2", part, "uː35")).cwiseAbs().maxCoeff() == 0);
    CHECK((new_row("uː5", part) - row(model, "l2", part, "uː5")).cwiseAbs().maxCoeff() == 0);
    CHECK((new_row("ɑo13", part) - row(model, "l3", part, "ɑʊ15")).cwiseAbs().maxCoeff() == 0);
  }

  const std::string text = format_audit(audit);
  CHECK(text.find("joint\tuː13\tjoint-two-stage:exact\tuː35\tl2\n") != std::string::npos);
  CHECK(text.find("joint\tɑo13\tjoint-two-stage:feature-nearest\tɑʊ15\tl3\n") != std::string::npos);
  CHECK(text.find("joint\ta5\texact\ta5\tl1,l2,l3\n") != std::string::npos);
  CHECK(text.find("joint\tb\tfeature-nearest\tp\tl3\n") != std::string::npos);
}

TEST_CASE("head initialization against exact double arithmetic") {
  // Rows chosen so every mean is exactly representable.
  AcousticModel<float> model = three_language_model();
  for (const std::string lang : {"l1", "l2", "l3"}) {
    auto& w = model.params().at(head_param_name(lang, TierId::joint, "w"));
    auto& b = model.params().at(head_param_name(lang, TierId::joint, "b"));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<float>((lang[1] - '0') * 3 + r + c);
      b(0, r) = static_cast<float>(lang[1] - '0');
    }
  }
  const TierAlphabet target = joint("new", {"a5"});
  const std::vector<SymbolMapping> m = {resolve_symbol("a5", TierId::joint, std::vector<TierAlphabet>{
      model.alphabet("l1", TierId::joint), model.alphabet("l2", TierId::joint),
      model.alphabet("l3", TierId::joint)})};
  const HeadInit init = init_head(target, m, model);
  // a5 is row 1 everywhere: (3+1+c + 6+1+c + 9+1+c) / 3 = 7 + c
  for (Eigen::Index c = 0; c < init.w.cols(); ++c) {
    CHECK(init.w(1, c) == static_cast<float>(7 + c));
    CHECK(init.w(0, c) == static_cast<float>(6 + c));
  }
  CHECK(init.b(0, 0) == 2.0f);
  CHECK(init.b(0, 1) == 2.0f);
}

TEST_CASE("stage A freezes the encoder and zero epochs change nothing") {
  AcousticModel<float> model = three_language_model();
  const AlphabetSet target = {{{"new", TierId::joint}, joint("new", {"a5", "k", "uː13"})}};
  init_language_heads(model, target);
  Checkpoint ckpt{model, Adadelta(OptimizerConfig{1.0, 0.95, 1e-6}), {}, {}};
  const auto train_set = random_examples(ckpt.model, "new", 6, 3);

  AdaptOptions none;
  none.heads.max_epochs = 0;
  none.full.max_epochs = 0;
  Checkpoint untouched = ckpt;
  adapt(untouched, train_set, {}, none);
  for (const auto& [name, p] : ckpt.model.params()) {
    CHECK(untouched.model.params().at(name) == p);
  }

  AdaptOptions heads_only;
  heads_only.heads.max_epochs = 3;
  heads_only.full.max_epochs = 0;
  Checkpoint a = ckpt;
  adapt(a, train_set, {}, heads_only);
  bool head_moved = false;
  for (const auto& [name, p] : ckpt.model.params()) {
    if (is_encoder_param(name) || name.find("/l1/") != std::string::npos ||
        name.find("/l2/") != std::string::npos || name.find("/l3/") != std::string::npos) {
      CHECK(a.model.params().at(name) == p);
    } else {
      head_moved = head_moved || a.model.params().at(name) != p;
    }
  }
  CHECK(head_moved);

  AdaptOptions both;
  both.heads.max_epochs = 2;
  both.full.max_epochs = 2;
  Checkpoint b = ckpt;
  const AdaptResult r = adapt(b, train_set, {}, both);
  CHECK(r.heads.epoch == 2);
  CHECK(r.full.epoch == 2);
  CHECK(b.model.params().at("encoder/fc/w") != ckpt.model.params().at("encoder/fc/w"));

  try {
    adapt(b, {}, {}, both);
    FAIL("expected DataEmpty");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data_empty);
  }
}
