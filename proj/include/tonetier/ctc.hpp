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

// Connectionist temporal classification: loss and gradient by
// forward-backward, an enumeration oracle, and greedy / prefix-beam decoding.

#pragma once

#include <limits>
#include <span>
#include <vector>

#include "tonetier/types.hpp"

namespace tonetier {

using LabelSequence = std::vector<int>;

inline constexpr int kBlankLabel = 0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Merges adjacent duplicates, then drops blanks.
LabelSequence collapse(std::span<const int> path, int blank = kBlankLabel);

// Shortest alignable frame count: one frame per label plus one blank between
// each pair of equal neighbours.
int min_frames(std::span<const int> ref);

Matrix log_softmax_rows(const MatrixRef& logits);

struct CtcResult {
  double loss = 0;   // +inf when the reference cannot be aligned
  Matrix gradient;   // d loss / d logits; zero when !feasible
  bool feasible = true;
};

// logits: n x (1 + |alphabet|), column 0 is the blank. ref holds labels >= 1.
CtcResult ctc_loss(const MatrixRef& logits, std::span<const int> ref,
                   bool with_gradient = true);

// Exact loss by summing over every path; n <= 8 and at most 4 non-blank
// labels, otherwise TooLarge.
double brute_force_ctc(const MatrixRef& logits, std::span<const int> ref);

LabelSequence greedy_decode(const MatrixRef& logits);

// Label bigram with add-one smoothing. Label 0 doubles as the sentence
// boundary: log_prob(0, k) starts a sentence, log_prob(k, 0) ends one.
class BigramLm {
 public:
  BigramLm() = default;
  explicit BigramLm(int num_labels);  // uniform

  static BigramLm train(std::span<const LabelSequence> sequences,
                        int num_labels);

  int num_labels() const { return static_cast<int>(table_.rows()); }
  double log_prob(int prev, int next) const { return table_(prev, next); }
  void set_log_prob(int prev, int next, double value) {
    table_(prev, next) = value;
  }
  const Matrix& table() const { return table_; }
  static BigramLm from_table(Matrix table);

 private:
  Matrix table_;  // num_labels x num_labels
};

struct BeamOptions {
  int beam_width = 25;
  double lm_weight = 0.1;
  const BigramLm* lm = nullptr;
};

struct Hypothesis {
  LabelSequence labels;
  double ctc_log_prob = 0;  // exact log P_ctc of the labels
  double lm_log_prob = 0;   // includes the sentence-end transition
  double score = 0;         // ctc_log_prob + lm_weight * lm_log_prob
};

// Prefix beam search. Survivors, plus the best-path hypothesis, are rescored
// exactly and returned best first.
std::vector<Hypothesis> beam_search(const MatrixRef& logits,
                                    const BeamOptions& options);

LabelSequence beam_decode(const MatrixRef& logits, const BeamOptions& options);

}  // namespace tonetier
