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

#include "tonetier/transfer.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "tonetier/error.hpp"

namespace tonetier {

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::exact: return "exact";
    case Resolution::diacritic: return "diacritic";
    case Resolution::feature: return "feature-nearest";
    case Resolution::joint_two_stage: return "joint-two-stage";
  }
  return "?";
}

namespace {

std::string_view match_name(MatchKind k) {
  switch (k) {
    case MatchKind::exact: return "exact";
    case MatchKind::diacritic: return "diacritic";
    case MatchKind::feature: return "feature-nearest";
  }
  return "?";
}

std::vector<int> digits(const std::vector<ToneTarget>& tones) {
  std::vector<int> out;
  for (const ToneTarget& t : tones) {
    if (t.is_pitch()) out.push_back(t.digit());
  }
  if (out.empty()) out.push_back(3);
  return out;
}

std::vector<std::string> holders(const std::string& symbol, std::span<const TierAlphabet> training) {
  std::vector<std::string> out;
  for (const TierAlphabet& a : training) {
    if (a.contains(symbol)) out.push_back(a.lang());
  }
  return out;
}

[[noreturn]] void unresolvable(const std::string& k, TierId tier, const std::string& why) {
  fail(ErrorCode::unresolvable,
       "cannot map " + std::string(to_string(tier)) + " symbol '" + k + "': " + why);
}

PhoneMatch match_segment(const std::string& k, TierId tier, const std::set<std::string>& pool,
                         const DistanceWeights& weights) {
  std::vector<IpaSymbol> candidates;
  for (const auto& s : pool) candidates.push_back(parse_segment(s));
  try {
    return nearest_phone_match(parse_segment(k), candidates, weights);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::no_candidate) unresolvable(k, tier, "no symbol of the same category");
    throw;
  }
}

}  // namespace

int tone_distance(const std::vector<ToneTarget>& a, const std::vector<ToneTarget>& b) {
  std::vector<int> x = digits(a), y = digits(b);
  const std::size_t n = std::max(x.size(), y.size());
  x.resize(n, x.back());
  y.resize(n, y.back());
  int d = 0;
  for (std::size_t i = 0; i < n; ++i) d += std::abs(x[i] - y[i]);
  return d;
}

SymbolMapping resolve_symbol(const std::string& k, TierId tier,
                             std::span<const TierAlphabet> training,
                             const DistanceWeights& weights) {
  if (training.empty()) unresolvable(k, tier, "no training alphabets");
  SymbolMapping m;
  m.target = k;
  m.tier = tier;
  m.source = k;
  m.contributors = holders(k, training);
  if (!m.contributors.empty()) return m;
  if (tier == TierId::tone || tier == TierId::voice) {
    unresolvable(k, tier, "absent from every training alphabet");
  }

  std::set<std::string> pool;
  for (const TierAlphabet& a : training) pool.insert(a.symbols().begin(), a.symbols().end());

  if (tier == TierId::phone) {
    const PhoneMatch pm = match_segment(k, tier, pool, weights);
    m.resolution = pm.kind == MatchKind::diacritic ? Resolution::diacritic : Resolution::feature;
    m.source = pm.symbol.segment();
    m.contributors = holders(m.source, training);
    return m;
  }

  // Joint tier: match the phone over the segments in use, then pick the
  // closest tone among the matched phone's symbols.
  const JointParts parts = split_joint_symbol(k);
  std::map<std::string, std::vector<std::string>> variants;  // segment -> symbols
  for (const auto& s : pool) variants[split_joint_symbol(s).segment].push_back(s);
  std::set<std::string> segments;
  for (const auto& [seg, syms] : variants) segments.insert(seg);
  const PhoneMatch pm = match_segment(parts.segment, tier, segments, weights);
  const std::string seg = pm.symbol.segment();
  const Category cat = parse_segment(seg).category;
  if (cat != Category::vowel) {
    // Bare consonants carry no tone: a one-stage phone match.
    m.resolution = pm.kind == MatchKind::diacritic ? Resolution::diacritic : Resolution::feature;
    m.source = seg;
  } else {
    m.resolution = Resolution::joint_two_stage;
    m.phone_stage = pm.kind;
    int best = -1;
    for (const auto& sym : variants.at(seg)) {  // sorted, so ties keep the first
      const int d = tone_distance(parts.tones, split_joint_symbol(sym).tones);
      if (best < 0 || d < best) {
        best = d;
        m.source = sym;
      }
    }
  }
  m.contributors = holders(m.source, training);
  return m;
}

HeadInit init_head(const TierAlphabet& target, std::span<const SymbolMapping> mappings,
                   const AcousticModel<float>& model) {
  std::vector<const TierAlphabet*> training;
  for (const auto& [key, alpha] : model.alphabets()) {
    if (key.second == target.tier() && key.first != target.lang()) training.push_back(&alpha);
  }
  if (training.empty()) {
    fail(ErrorCode::unresolvable, "no trained " + std::string(to_string(target.tier())) + " heads");
  }
  std::map<std::string, const SymbolMapping*> by_target;
  for (const SymbolMapping& m : mappings) by_target[m.target] = &m;
  const Eigen::Index d = model.config().fc_dim;
  const auto c = static_cast<Eigen::Index>(target.size());
  HeadInit out{MatT<float>::Zero(c, d), MatT<float>::Zero(1, c)};

  auto head = [&](const std::string& lang, const char* part) -> const MatT<float>& {
    return model.params().at(head_param_name(lang, target.tier(), part));
  };
  // Accumulate in double for an order-independent, exact-as-possible mean.
  auto average = [&](Eigen::Index row, const std::vector<std::pair<std::string, int>>& src) {
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(d);
    double b = 0;
    for (const auto& [lang, idx] : src) {
      w += head(lang, "w").row(idx).cast<double>();
      b += static_cast<double>(head(lang, "b")(0, idx));
    }
    const double n = static_cast<double>(src.size());
    out.w.row(row) = (w / n).cast<float>();
    out.b(0, row) = static_cast<float>(b / n);
  };

  std::vector<std::pair<std::string, int>> blanks;
  for (const TierAlphabet* a : training) blanks.emplace_back(a->lang(), 0);
  average(0, blanks);
  for (std::size_t k = 0; k < target.symbols().size(); ++k) {
    const std::string& sym = target.symbols()[k];
    auto it = by_target.find(sym);
    if (it == by_target.end()) unresolvable(sym, target.tier(), "no mapping supplied");
    std::vector<std::pair<std::string, int>> src;
    for (const TierAlphabet* a : training) {
      const auto& langs = it->second->contributors;
      if (std::find(langs.begin(), langs.end(), a->lang()) == langs.end()) continue;
      const int idx = a->index_of(it->second->source);
      if (idx > 0) src.emplace_back(a->lang(), idx);
    }
    if (src.empty()) unresolvable(sym, target.tier(), "mapped symbol has no trained row");
    average(static_cast<Eigen::Index>(k + 1), src);
  }
  return out;
}

std::vector<SymbolMapping> init_language_heads(AcousticModel<float>& model,
                                               const AlphabetSet& target,
                                               const DistanceWeights& weights) {
  std::vector<SymbolMapping> audit;
  for (const auto& [key, alpha] : target) {
    if (!model.variant().has(key.second)) continue;
    std::vector<TierAlphabet> training;
    for (const auto& [mk, ma] : model.alphabets()) {
      if (mk.second == key.second && mk.first != key.first) training.push_back(ma);
    }
    std::vector<SymbolMapping> mappings;
    for (const std::string& sym : alpha.symbols()) {
      mappings.push_back(resolve_symbol(sym, key.second, training, weights));
    }
    HeadInit init = init_head(alpha, mappings, model);
    model.set_head(alpha, std::move(init.w), std::move(init.b));
    audit.insert(audit.end(), mappings.begin(), mappings.end());
  }
  return audit;
}

std::string format_audit(std::span<const SymbolMapping> mappings) {
  std::ostringstream out;
  for (const SymbolMapping& m : mappings) {
    std::string langs;
    for (const auto& l : m.contributors) langs += (langs.empty() ? "" : ",") + l;
    std::string res(to_string(m.resolution));
    if (m.resolution == Resolution::joint_two_stage) res += ":" + std::string(match_name(m.phone_stage));
    out << to_string(m.tier) << "\t" << m.target << "\t" << res << "\t" << m.source << "\t" << langs
        << "\n";
  }
  return out.str();
}

AdaptResult adapt(Checkpoint& ckpt, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const AdaptOptions& options) {
  if (train_set.empty()) fail(ErrorCode::data_empty, "no adaptation utterances");
  AdaptResult r;
  TrainOptions a = options.heads;
  a.scope = TrainScope::heads_only;
  r.heads = train(ckpt.model, ckpt.optimizer, train_set, dev_set, a);
  TrainOptions b = options.full;
  b.scope = TrainScope::all;
  r.full = train(ckpt.model, ckpt.optimizer, train_set, dev_set, b);
  ckpt.state = r.full;
  return r;
}

}  // namespace tonetier
