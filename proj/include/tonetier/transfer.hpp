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

// Cross-lingual initialization of a new language's softmax heads from the
// trained languages' heads, and the two-stage adaptation schedule.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tonetier/ipa.hpp"
#include "tonetier/training.hpp"

namespace tonetier {

enum class Resolution : std::uint8_t { exact, diacritic, feature, joint_two_stage };

std::string_view to_string(Resolution r);

struct SymbolMapping {
  std::string target;
  TierId tier = TierId::joint;
  Resolution resolution = Resolution::exact;
  // How the phone part was matched for joint_two_stage mappings.
  MatchKind phone_stage = MatchKind::exact;
  std::string source;  // k'; equals target for exact mappings
  std::vector<std::string> contributors;  // training languages holding source
};

// Sum of absolute Chao-digit differences after padding the shorter contour
// by repeating its last target. Voice marks are ignored; a toneless symbol
// counts as the mid level.
int tone_distance(const std::vector<ToneTarget>& a, const std::vector<ToneTarget>& b);

// Cascade: exact presence in a training alphabet, then a one-diacritic
// variant, then the feature-nearest symbol of the same category over the
// union of training alphabets. Joint-tier vowels match the phone first and
// then the closest tone among that phone's variants. Throws Unresolvable.
SymbolMapping resolve_symbol(const std::string& k, TierId tier,
                             std::span<const TierAlphabet> training,
                             const DistanceWeights& weights = {});

struct HeadInit {
  MatT<float> w;
  MatT<float> b;
};

// Row k = mean of the contributing languages' rows for the mapped symbol;
// the blank row is the mean of every training language's blank row. Biases
// follow the same rule.
HeadInit init_head(const TierAlphabet& target, std::span<const SymbolMapping> mappings,
                   const AcousticModel<float>& model);

// Resolves every symbol of `target` against the model's other languages and
// installs the initialized heads. Returns the audit, tier by tier.
std::vector<SymbolMapping> init_language_heads(AcousticModel<float>& model,
                                               const AlphabetSet& target,
                                               const DistanceWeights& weights = {});

// `k<TAB>resolution<TAB>k'<TAB>lang,lang` per mapping, with a tier column
// first.
std::string format_audit(std::span<const SymbolMapping> mappings);

struct AdaptOptions {
  TrainOptions heads;  // stage A: encoder frozen
  TrainOptions full;   // stage B: everything trainable
};

struct AdaptResult {
  TrainState heads;
  TrainState full;
};

AdaptResult adapt(Checkpoint& ckpt, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const AdaptOptions& options);

}  // namespace tonetier
