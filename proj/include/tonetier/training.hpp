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

// Training loop (Adadelta, language-homogeneous batches, early stopping),
// checkpoints and beam-search decoding.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tonetier/ctc.hpp"
#include "tonetier/model.hpp"
#include "tonetier/tiering.hpp"

namespace tonetier {

struct OptimizerConfig {
  double learning_rate = 0.004;
  double rho = 0.95;
  double epsilon = 1e-6;
};

// Everything the `train` stage reads from its key=value config file.
struct TrainConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  int max_epochs = 200;
  int patience = 10;
  int batch_size = 8;
  std::uint64_t seed = 1;

  // Keys: input_dim hidden_dim fc_dim variant learning_rate rho epsilon
  // max_epochs patience batch_size seed. Unknown keys are a config error.
  static TrainConfig parse(std::string_view text);
  std::string serialize() const;
};

class Adadelta {
 public:
  Adadelta() = default;
  explicit Adadelta(const OptimizerConfig& config) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  // Updates every parameter whose name passes `trainable`.
  void step(ParamMap<float>& params, const ParamMap<float>& grads,
            const std::function<bool(const std::string&)>& trainable);

  std::map<std::string, MatrixF>& sq_grad() { return sq_grad_; }
  std::map<std::string, MatrixF>& sq_delta() { return sq_delta_; }
  const std::map<std::string, MatrixF>& sq_grad() const { return sq_grad_; }
  const std::map<std::string, MatrixF>& sq_delta() const { return sq_delta_; }

 private:
  OptimizerConfig config_;
  std::map<std::string, MatrixF> sq_grad_;
  std::map<std::string, MatrixF> sq_delta_;
};

enum class TrainScope : std::uint8_t { all, heads_only };

struct EpochReport {
  int epoch = 0;  // 1-based
  double train_loss = 0;  // mean total loss per feasible utterance
  double dev_loss = 0;    // NaN without a dev set
  std::map<TierId, double> train_tier_loss;
  int skipped = 0;        // infeasible training utterances
};

struct TrainState {
  int epoch = 0;
  double best_dev_loss = kInf;
  int best_epoch = 0;
  int bad_epochs = 0;
  std::vector<EpochReport> history;
};

struct TrainOptions {
  int max_epochs = 200;
  int patience = 10;
  int batch_size = 8;
  std::uint64_t seed = 1;
  TrainScope scope = TrainScope::all;
  // Called after every epoch; returning false stops training.
  std::function<bool(const EpochReport&)> on_epoch;
};

// Trains in place. With a dev set, stops after `patience` epochs without a
// dev-loss improvement and restores the best parameters; without one, runs
// max_epochs (or until on_epoch declines) and keeps the last parameters.
TrainState train(AcousticModel<float>& model, Adadelta& optimizer,
                 std::span<const Example> train_set,
                 std::span<const Example> dev_set, const TrainOptions& options);

// Mean total loss per feasible utterance; NaN when none is feasible.
double mean_loss(const AcousticModel<float>& model,
                 std::span<const Example> examples);

// Per-tier label sequences for an utterance; symbols outside the alphabet
// are an UnknownLabel error.
Example make_example(const TokenizedUtterance& utt, MatrixF features,
                     const AlphabetSet& alphabets, const ModelVariant& variant,
                     const TieringOptions& options = {});

using LanguageModels = std::map<AlphabetKey, BigramLm>;

// Bigram LMs per (language, tier) from the training labels, rounded to
// binary32 so that saved and in-memory models decode identically.
LanguageModels train_language_models(std::span<const Example> examples,
                                     const AlphabetSet& alphabets);

struct Checkpoint {
  AcousticModel<float> model;
  Adadelta optimizer;
  TrainState state;
  LanguageModels lms;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct DecodeOptions {
  int beam_width = 25;
  double lm_weight = 0.1;
};

// Decodes every tier of the model's variant. Throws MissingHead when the
// utterance language has no head for a tier.
TierHypotheses decode_utterance(const Checkpoint& ckpt, const MatrixF& features,
                                const std::string& lang,
                                const DecodeOptions& options = {});

std::vector<TierHypotheses> evaluate(const Checkpoint& ckpt,
                                     std::span<const Example> examples,
                                     const DecodeOptions& options = {});

}  // namespace tonetier
