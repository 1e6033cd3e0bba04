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

#include <cmath>
#include <random>

#include "doctest.h"
#include "tonetier/error.hpp"
#include "tonetier/training.hpp"

using namespace tonetier;

namespace {

AlphabetSet alphabets_for(int variant) {
  AlphabetSet set;
  const ModelVariant v(variant);
  for (const std::string lang : {"aa", "bb"}) {
    for (TierId t : v.tiers()) {
      std::vector<std::string> syms;
      switch (t) {
        case TierId::joint: syms = {"a5", "i3", "k", "t"}; break;
        case TierId::phone: syms = {"a", "i", "k", "t"}; break;
        case TierId::tone: syms = {"<boundary>", "˥", "˧"}; break;
        case TierId::voice: syms = {"<boundary>", "<modal>", "h", "ʔ"}; break;
      }
      set.emplace(AlphabetKey{lang, t}, TierAlphabet(t, lang, syms));
    }
  }
  return set;
}

std::vector<Example> examples_for(const AcousticModel<float>& m, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<Example> out;
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.lang = i % 2 ? "bb" : "aa";
    ex.utt_id = ex.lang + std::to_string(i);
    ex.features = MatrixF(20, m.config().input_dim);
    for (Eigen::Index k = 0; k < ex.features.size(); ++k) ex.features.data()[k] = g(rng);
    for (TierId t : m.variant().tiers()) {
      const int c = static_cast<int>(m.alphabet(ex.lang, t).size());
      ex.labels[t] = {1 + static_cast<int>(rng() % (c - 1)), 1 + static_cast<int>(rng() % (c - 1))};
    }
    out.push_back(std::move(ex));
  }
  return out;
}

AcousticModel<float> small_model(int variant, std::uint64_t seed = 5) {
  return AcousticModel<float>(ModelConfig{6, 4, 5, variant}, alphabets_for(variant), seed);
}

}  // namespace

TEST_CASE("optimizer and decoder defaults") {
  const OptimizerConfig o;
  CHECK(o.learning_rate == 0.004);
  CHECK(o.rho == 0.95);
  const DecodeOptions d;
  CHECK(d.beam_width == 25);
  CHECK(d.lm_weight == 0.1);
}

TEST_CASE("one epoch at learning rate zero leaves parameters unchanged") {
  AcousticModel<float> model = small_model(3);
  const auto before = model.params();
  Adadelta opt(OptimizerConfig{0.0, 0.95, 1e-6});
  TrainOptions options;
  options.max_epochs = 1;
  const auto data = examples_for(model, 6, 1);
  const TrainState s = train(model, opt, data, {}, options);
  CHECK(s.epoch == 1);
  CHECK(s.history.size() == 1);
  for (const auto& [name, p] : before) CHECK(model.params().at(name) == p);
}

TEST_CASE("training lowers the loss and is deterministic") {
  auto run = [](std::uint64_t seed) {
    AcousticModel<float> model = small_model(3);
    Adadelta opt(OptimizerConfig{1.0, 0.95, 1e-6});
    TrainOptions options;
    options.max_epochs = 8;
    options.batch_size = 2;
    options.seed = seed;
    const auto data = examples_for(model, 8, 2);
    const TrainState s = train(model, opt, data, {}, options);
    return std::pair(s, model.params());
  };
  const auto [s1, p1] = run(3);
  const auto [s2, p2] = run(3);
  REQUIRE(s1.history.size() == 8);
  CHECK(s1.history.back().train_loss < s1.history.front().train_loss);
  for (std::size_t i = 0; i < s1.history.size(); ++i) {
    CHECK(s1.history[i].train_loss == s2.history[i].train_loss);
  }
  for (const auto& [name, p] : p1) CHECK(p2.at(name) == p);
  const auto [s3, p3] = run(4);
  CHECK(s3.history.back().train_loss != s1.history.back().train_loss);
}

TEST_CASE("early stopping restores the best dev parameters") {
  AcousticModel<float> model = small_model(1);
  Adadelta opt(OptimizerConfig{1.0, 0.95, 1e-6});
  const auto data = examples_for(model, 8, 2);
  const auto dev = examples_for(model, 4, 9);
  TrainOptions options;
  options.max_epochs = 30;
  options.patience = 2;
  const TrainState s = train(model, opt, data, dev, options);
  CHECK(s.best_epoch >= 1);
  CHECK(s.best_epoch <= s.epoch);
  CHECK(std::abs(mean_loss(model, dev) - s.best_dev_loss) < 1e-9 * (1 + s.best_dev_loss));
  if (s.epoch < 30) CHECK(s.epoch - s.best_epoch == 2);
}

TEST_CASE("empty training data is an error") {
  AcousticModel<float> model = small_model(1);
  Adadelta opt;
  try {
    train(model, opt, {}, {}, TrainOptions{});
    FAIL("expected DataEmpty");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data_empty);
  }
}

TEST_CASE("train config round trip and errors") {
  const TrainConfig c = TrainConfig::parse("variant = 4\nhidden_dim=16\n# comment\nlearning_rate=0.5\nseed=9\n");
  CHECK(c.model.variant == 4);
  CHECK(c.model.hidden_dim == 16);
  CHECK(c.optimizer.learning_rate == 0.5);
  CHECK(c.seed == 9);
  CHECK(c.max_epochs == 200);
  const TrainConfig d = TrainConfig::parse(c.serialize());
  CHECK(d.model == c.model);
  CHECK(d.optimizer.learning_rate == c.optimizer.learning_rate);
  CHECK(d.seed == c.seed);
  for (const char* bad : {"bogus=1\n", "variant=5\n", "hidden_dim=x\n", "patience\n"}) {
    CAPTURE(bad);
    try {
      TrainConfig::parse(bad);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config_error);
    }
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  AcousticModel<float> model = small_model(4);
  Checkpoint ckpt{model, Adadelta(OptimizerConfig{1.0, 0.9, 1e-6}), {}, {}};
  const auto data = examples_for(ckpt.model, 4, 2);
  TrainOptions options;
  options.max_epochs = 2;
  ckpt.state = train(ckpt.model, ckpt.optimizer, data, {}, options);
  ckpt.lms = train_language_models(data, ckpt.model.alphabets());

  const std::string bytes = encode_checkpoint(ckpt);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(back.model.config() == ckpt.model.config());
  CHECK(back.model.alphabets().size() == ckpt.model.alphabets().size());
  for (const auto& [name, p] : ckpt.model.params()) CHECK(back.model.params().at(name) == p);
  for (const auto& [name, p] : ckpt.optimizer.sq_grad()) CHECK(back.optimizer.sq_grad().at(name) == p);
  CHECK(back.optimizer.config().rho == 0.9);
  CHECK(back.state.epoch == 2);
  CHECK(back.lms.size() == ckpt.lms.size());
  for (const auto& ex : data) {
    CHECK(decode_utterance(back, ex.features, ex.lang) == decode_utterance(ckpt, ex.features, ex.lang));
  }
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      decode_checkpoint(std::string_view(bytes).substr(0, cut));
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::format_error);
    }
  }
}

TEST_CASE("beam one without LM equals the greedy path") {
  Checkpoint ckpt{small_model(3, 11), Adadelta(), {}, {}};
  const auto data = examples_for(ckpt.model, 6, 4);
  ckpt.lms = train_language_models(data, ckpt.model.alphabets());
  const auto hyps = evaluate(ckpt, data, DecodeOptions{1, 0.0});
  REQUIRE(hyps.size() == data.size());
  int differ = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto hidden = ckpt.model.encode(data[i].features);
    for (TierId t : ckpt.model.variant().tiers()) {
      const MatT<double> logits = ckpt.model.logits(hidden, data[i].lang, t).cast<double>();
      const TierAlphabet& alpha = ckpt.model.alphabet(data[i].lang, t);
      const LabelSequence greedy = greedy_decode(logits);
      LabelSequence beam;
      for (const auto& s : hyps[i].at(t)) beam.push_back(alpha.index_of(s));
      // The beam result is the greedy path unless it found a strictly more
      // probable labelling.
      if (beam != greedy) {
        ++differ;
        CHECK(-ctc_loss(logits, beam, false).loss > -ctc_loss(logits, greedy, false).loss);
      }
      ++total;
    }
  }
  CHECK(differ * 4 < total);
}

TEST_CASE("decoding an unseen language is MissingHead") {
  Checkpoint ckpt{small_model(1), Adadelta(), {}, {}};
  auto data = examples_for(ckpt.model, 1, 4);
  data[0].lang = "zz";
  try {
    evaluate(ckpt, data);
    FAIL("expected MissingHead");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_head);
  }
}
