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

#include "tonetier/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "tonetier/error.hpp"

namespace tonetier {

namespace {

constexpr double kNegInf = -kInf;

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

void check_logits(const MatrixRef& logits, std::span<const int> ref) {
  if (logits.cols() < 1) fail(ErrorCode::dim_mismatch, "logits need a blank column");
  if (!logits.allFinite()) fail(ErrorCode::dim_mismatch, "logits must be finite");
  for (int l : ref) {
    if (l <= 0 || l >= logits.cols()) {
      fail(ErrorCode::unknown_label,
           "reference label " + std::to_string(l) + " outside 1.." +
               std::to_string(logits.cols() - 1));
    }
  }
}

}  // namespace

LabelSequence collapse(std::span<const int> path, int blank) {
  LabelSequence out;
  int prev = -1;
  for (int y : path) {
    if (y != prev && y != blank) out.push_back(y);
    prev = y;
  }
  return out;
}

int min_frames(std::span<const int> ref) {
  int n = static_cast<int>(ref.size());
  for (std::size_t i = 1; i < ref.size(); ++i) {
    if (ref[i] == ref[i - 1]) ++n;
  }
  return n;
}

Matrix log_softmax_rows(const MatrixRef& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    double mx = logits.row(t).maxCoeff();
    double lse = mx + std::log((logits.row(t).array() - mx).exp().sum());
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

CtcResult ctc_loss(const MatrixRef& logits, std::span<const int> ref,
                   bool with_gradient) {
  check_logits(logits, ref);
  const int n = static_cast<int>(logits.rows());
  const int num_classes = static_cast<int>(logits.cols());
  CtcResult result;
  if (with_gradient) result.gradient = Matrix::Zero(n, num_classes);
  if (n == 0 || n < min_frames(ref)) {
    result.loss = kInf;
    result.feasible = false;
    return result;
  }

  // Blank-interleaved labels: b l1 b l2 ... lm b
  const int m = static_cast<int>(ref.size());
  const int S = 2 * m + 1;
  std::vector<int> ext(S, kBlankLabel);
  for (int i = 0; i < m; ++i) ext[2 * i + 1] = ref[i];
  auto can_skip = [&](int s) {  // transition s-2 -> s
    return s >= 2 && ext[s] != kBlankLabel && ext[s] != ext[s - 2];
  };

  const Matrix lp = log_softmax_rows(logits);
  Matrix alpha = Matrix::Constant(n, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (int t = 1; t < n; ++t) {
    // States that cannot reach the end in the remaining frames stay -inf,
    // but computing them is harmless and keeps the loop simple.
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  }
  double log_p = alpha(n - 1, S - 1);
  if (S > 1) log_p = log_add(log_p, alpha(n - 1, S - 2));
  if (log_p == kNegInf) {
    result.loss = kInf;
    result.feasible = false;
    return result;
  }
  result.loss = -log_p;
  if (!with_gradient) return result;

  // beta(t, s): log prob of frames t+1.. given state s at t (emission at t
  // excluded), so alpha + beta is the log occupancy of (t, s).
  Matrix beta = Matrix::Constant(n, S, kNegInf);
  beta(n - 1, S - 1) = 0.0;
  if (S > 1) beta(n - 1, S - 2) = 0.0;
  for (int t = n - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(s + 2)) {
        b = log_add(b, beta(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      }
      beta(t, s) = b;
    }
  }

  std::vector<double> occupancy(num_classes);
  for (int t = 0; t < n; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (int s = 0; s < S; ++s) {
      occupancy[ext[s]] = log_add(occupancy[ext[s]], alpha(t, s) + beta(t, s));
    }
    for (int k = 0; k < num_classes; ++k) {
      double posterior =
          occupancy[k] == kNegInf ? 0.0 : std::exp(occupancy[k] - log_p);
      result.gradient(t, k) = std::exp(lp(t, k)) - posterior;
    }
  }
  return result;
}

double brute_force_ctc(const MatrixRef& logits, std::span<const int> ref) {
  check_logits(logits, ref);
  const int n = static_cast<int>(logits.rows());
  const int num_classes = static_cast<int>(logits.cols());
  if (n > 8 || num_classes > 5) {
    fail(ErrorCode::too_large, "enumeration limited to n<=8 and 4 labels, got n=" +
                                   std::to_string(n) + " with " +
                                   std::to_string(num_classes - 1) + " labels");
  }
  // Independent of the forward-backward path: explicit per-row softmax and
  // a product over every frame of every path.
  std::vector<std::vector<double>> prob(n, std::vector<double>(num_classes));
  for (int t = 0; t < n; ++t) {
    double mx = logits.row(t).maxCoeff();
    double z = 0;
    for (int k = 0; k < num_classes; ++k) z += std::exp(logits(t, k) - mx);
    for (int k = 0; k < num_classes; ++k) {
      prob[t][k] = std::exp(logits(t, k) - mx) / z;
    }
  }
  const LabelSequence target(ref.begin(), ref.end());
  std::vector<int> path(n, 0);
  long double total = 0;
  while (true) {
    if (collapse(path) == target) {
      long double p = 1;
      for (int t = 0; t < n; ++t) p *= prob[t][path[t]];
      total += p;
    }
    int t = n - 1;
    while (t >= 0 && ++path[t] == num_classes) path[t--] = 0;
    if (t < 0) break;
  }
  return total > 0 ? -static_cast<double>(std::log(total)) : kInf;
}

LabelSequence greedy_decode(const MatrixRef& logits) {
  std::vector<int> path(logits.rows());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    Eigen::Index k = 0;
    logits.row(t).maxCoeff(&k);
    path[t] = static_cast<int>(k);
  }
  return collapse(path);
}

// ---------------------------------------------------------------------------
// Bigram LM

BigramLm::BigramLm(int num_labels)
    : table_(Matrix::Constant(num_labels, num_labels,
                              -std::log(static_cast<double>(num_labels)))) {}

BigramLm BigramLm::train(std::span<const LabelSequence> sequences,
                         int num_labels) {
  Matrix counts = Matrix::Ones(num_labels, num_labels);  // add-one
  for (const auto& seq : sequences) {
    int prev = 0;
    for (int l : seq) {
      if (l <= 0 || l >= num_labels) {
        fail(ErrorCode::unknown_label, "LM training label " + std::to_string(l));
      }
      counts(prev, l) += 1;
      prev = l;
    }
    counts(prev, 0) += 1;
  }
  BigramLm lm;
  lm.table_ = Matrix(num_labels, num_labels);
  for (int i = 0; i < num_labels; ++i) {
    double total = counts.row(i).sum();
    for (int j = 0; j < num_labels; ++j) {
      lm.table_(i, j) = std::log(counts(i, j) / total);
    }
  }
  return lm;
}

BigramLm BigramLm::from_table(Matrix table) {
  if (table.rows() != table.cols()) {
    fail(ErrorCode::dim_mismatch, "bigram table must be square");
  }
  BigramLm lm;
  lm.table_ = std::move(table);
  return lm;
}

// ---------------------------------------------------------------------------
// Prefix beam search

namespace {

struct BeamEntry {
  double blank = kNegInf;      // paths ending in blank
  double non_blank = kNegInf;  // paths ending in the last label
  double lm = 0;
  double total() const { return log_add(blank, non_blank); }
};

}  // namespace

std::vector<Hypothesis> beam_search(const MatrixRef& logits,
                                    const BeamOptions& options) {
  if (options.beam_width < 1) {
    fail(ErrorCode::config_error, "beam width must be >= 1");
  }
  const int n = static_cast<int>(logits.rows());
  const int num_classes = static_cast<int>(logits.cols());
  const BigramLm* lm = options.lm;
  if (lm && lm->num_labels() != num_classes) {
    fail(ErrorCode::dim_mismatch, "LM has " + std::to_string(lm->num_labels()) +
                                      " labels, logits have " +
                                      std::to_string(num_classes));
  }
  const double weight = lm ? options.lm_weight : 0.0;
  auto score_of = [&](const BeamEntry& e) {
    return weight == 0.0 ? e.total() : e.total() + weight * e.lm;
  };

  const Matrix lp = log_softmax_rows(logits);
  std::vector<std::pair<LabelSequence, BeamEntry>> beam;
  beam.push_back({{}, BeamEntry{0.0, kNegInf, 0.0}});

  for (int t = 0; t < n; ++t) {
    std::map<LabelSequence, BeamEntry> next;
    for (const auto& [prefix, entry] : beam) {
      const int last = prefix.empty() ? 0 : prefix.back();
      const double total = entry.total();
      auto& stay = next[prefix];
      stay.lm = entry.lm;
      stay.blank = log_add(stay.blank, total + lp(t, kBlankLabel));
      if (!prefix.empty()) {
        stay.non_blank = log_add(stay.non_blank, entry.non_blank + lp(t, last));
      }
      for (int c = 1; c < num_classes; ++c) {
        double lm_term = 0;
        if (lm && weight != 0.0) {
          lm_term = lm->log_prob(last, c);
          if (lm_term == kNegInf) continue;
        }
        LabelSequence extended = prefix;
        extended.push_back(c);
        auto& ext = next[extended];
        ext.lm = entry.lm + lm_term;
        const double from = c == last ? entry.blank : total;
        ext.non_blank = log_add(ext.non_blank, from + lp(t, c));
      }
    }
    beam.assign(next.begin(), next.end());
    std::stable_sort(beam.begin(), beam.end(), [&](const auto& a, const auto& b) {
      return score_of(a.second) > score_of(b.second);
    });
    if (static_cast<int>(beam.size()) > options.beam_width) {
      beam.resize(options.beam_width);
    }
  }

  // Pruning makes the in-beam CTC scores lower bounds. The survivors and the
  // best-path hypothesis are rescored with the exact forward probability.
  std::vector<LabelSequence> finalists;
  for (const auto& [prefix, entry] : beam) finalists.push_back(prefix);
  LabelSequence greedy = greedy_decode(logits);
  if (std::find(finalists.begin(), finalists.end(), greedy) == finalists.end()) {
    finalists.push_back(std::move(greedy));
  }

  std::vector<Hypothesis> out;
  for (auto& labels : finalists) {
    Hypothesis h;
    h.ctc_log_prob = -ctc_loss(logits, labels, false).loss;
    if (lm && weight != 0.0) {
      int prev = 0;
      for (int l : labels) {
        h.lm_log_prob += lm->log_prob(prev, l);
        prev = l;
      }
      h.lm_log_prob += lm->log_prob(prev, 0);
      h.score = h.ctc_log_prob + weight * h.lm_log_prob;
    } else {
      h.score = h.ctc_log_prob;
    }
    h.labels = std::move(labels);
    out.push_back(std::move(h));
  }
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.score > b.score;
  });
  return out;
}

LabelSequence beam_decode(const MatrixRef& logits, const BeamOptions& options) {
  auto hyps = beam_search(logits, options);
  return hyps.empty() ? LabelSequence{} : hyps.front().labels;
}

}  // namespace tonetier
