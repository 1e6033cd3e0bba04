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

// Pyramidal bidirectional LSTM encoder with a tanh fully-connected layer and
// per-language, per-tier softmax heads trained with summed CTC losses.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tonetier/ctc.hpp"
#include "tonetier/tiering.hpp"
#include "tonetier/types.hpp"

namespace tonetier {

struct ModelConfig {
  int input_dim = 40;
  int hidden_dim = 64;  // per direction
  int fc_dim = 64;
  int variant = 1;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr int kEncoderLayers = 3;

// Output length of the encoder: two halvings, odd lengths rounded up.
int encoded_length(int frames);

// One training or evaluation utterance with its per-tier label sequences.
struct Example {
  std::string utt_id;
  std::string lang;
  MatrixF features;  // T x input_dim
  std::map<TierId, LabelSequence> labels;
};

struct TierLosses {
  std::map<TierId, double> per_tier;
  double total = 0;  // exact sum of per_tier, in tier order
  bool feasible = true;
};

template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using ParamMap = std::map<std::string, MatT<S>>;

// logits = hidden * W^T + b, row by row. b is a 1 x C row.
template <class S>
MatT<S> head_logits(const MatT<S>& hidden, const MatT<S>& w, const MatT<S>& b);

std::string head_param_name(const std::string& lang, TierId tier,
                            std::string_view part);
bool is_encoder_param(const std::string& name);

template <class S>
class AcousticModel {
 public:
  using Mat = MatT<S>;
  using Params = ParamMap<S>;

  AcousticModel() = default;
  // Randomly initialized; one head per alphabet whose tier the variant uses.
  AcousticModel(const ModelConfig& config, const AlphabetSet& alphabets,
                std::uint64_t seed);
  // Wraps existing parameters; shapes are validated.
  AcousticModel(const ModelConfig& config, const AlphabetSet& alphabets,
                Params params);

  const ModelConfig& config() const { return config_; }
  const ModelVariant& variant() const { return variant_; }
  const AlphabetSet& alphabets() const { return alphabets_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  bool has_head(const std::string& lang, TierId tier) const;
  // Throws MissingHead.
  const TierAlphabet& alphabet(const std::string& lang, TierId tier) const;
  std::vector<std::string> languages() const;
  // Adds or replaces the head for alphabet.lang()/alphabet.tier().
  void set_head(const TierAlphabet& alphabet, Mat w, Mat b);

  // n x fc_dim hidden sequence; throws InputTooShort for T < 4.
  Mat encode(const Mat& features) const;
  Mat logits(const Mat& hidden, const std::string& lang, TierId tier) const;

  // Summed CTC loss over the variant's tiers. When grads is given, adds the
  // gradient of the total; the encoder part is skipped unless
  // encoder_grads is set. Infeasible examples return feasible = false and
  // contribute no gradient.
  TierLosses loss(const Example& ex, Params* grads = nullptr,
                  bool encoder_grads = true) const;

  Params zero_like() const;

  template <class T>
  AcousticModel<T> cast() const {
    ParamMap<T> p;
    for (const auto& [k, v] : params_) p.emplace(k, v.template cast<T>());
    return AcousticModel<T>(config_, alphabets_, std::move(p));
  }

 private:
  struct Cache;
  Mat forward(const Mat& features, Cache* cache) const;
  void backward(const Cache& cache, const Mat& d_hidden, Params& grads) const;

  ModelConfig config_;
  ModelVariant variant_{1};
  AlphabetSet alphabets_;
  Params params_;
};

extern template class AcousticModel<float>;
extern template class AcousticModel<double>;

}  // namespace tonetier
