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

#include "tonetier/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

#include "text_util.hpp"
#include "tonetier/error.hpp"
#include "tonetier/tpf.hpp"

namespace tonetier {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    auto as_int = [&] { return static_cast<int>(detail::parse_int(value, key)); };
    if (key == "input_dim") c.model.input_dim = as_int();
    else if (key == "hidden_dim") c.model.hidden_dim = as_int();
    else if (key == "fc_dim") c.model.fc_dim = as_int();
    else if (key == "variant") c.model.variant = as_int();
    else if (key == "learning_rate") c.optimizer.learning_rate = detail::parse_double(value, key);
    else if (key == "rho") c.optimizer.rho = detail::parse_double(value, key);
    else if (key == "epsilon") c.optimizer.epsilon = detail::parse_double(value, key);
    else if (key == "max_epochs") c.max_epochs = as_int();
    else if (key == "patience") c.patience = as_int();
    else if (key == "batch_size") c.batch_size = as_int();
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
    else fail(ErrorCode::config_error, "unknown training config key '" + key + "'");
  }
  if (c.max_epochs < 0 || c.patience < 1 || c.batch_size < 1) {
    fail(ErrorCode::config_error, "max_epochs >= 0, patience >= 1 and batch_size >= 1 required");
  }
  if (c.optimizer.learning_rate < 0 || c.optimizer.rho < 0 || c.optimizer.rho >= 1 ||
      c.optimizer.epsilon <= 0) {
    fail(ErrorCode::config_error, "invalid Adadelta hyperparameters");
  }
  ModelVariant v(c.model.variant);
  return c;
}

std::string TrainConfig::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "input_dim = " << model.input_dim << "\n"
      << "hidden_dim = " << model.hidden_dim << "\n"
      << "fc_dim = " << model.fc_dim << "\n"
      << "variant = " << model.variant << "\n"
      << "learning_rate = " << optimizer.learning_rate << "\n"
      << "rho = " << optimizer.rho << "\n"
      << "epsilon = " << optimizer.epsilon << "\n"
      << "max_epochs = " << max_epochs << "\n"
      << "patience = " << patience << "\n"
      << "batch_size = " << batch_size << "\n"
      << "seed = " << seed << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Optimizer

void Adadelta::step(ParamMap<float>& params, const ParamMap<float>& grads,
                    const std::function<bool(const std::string&)>& trainable) {
  const auto rho = static_cast<float>(config_.rho);
  const auto eps = static_cast<float>(config_.epsilon);
  const auto lr = static_cast<float>(config_.learning_rate);
  for (auto& [name, p] : params) {
    if (!trainable(name)) continue;
    const MatrixF& g = grads.at(name);
    auto [ig, new_g] = sq_grad_.try_emplace(name, MatrixF::Zero(p.rows(), p.cols()));
    auto [id, new_d] = sq_delta_.try_emplace(name, MatrixF::Zero(p.rows(), p.cols()));
    auto eg = ig->second.array();
    auto ed = id->second.array();
    eg = rho * eg + (1 - rho) * g.array().square();
    const Eigen::ArrayXXf delta =
        -((ed + eps).sqrt() / (eg + eps).sqrt()) * g.array();
    ed = rho * ed + (1 - rho) * delta.square();
    p.array() += lr * delta;
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Batch {
  std::string lang;
  std::vector<std::size_t> items;
};

std::vector<Batch> make_batches(std::span<const Example> set, int batch_size,
                                std::mt19937_64& rng) {
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < set.size(); ++i) by_lang[set[i].lang].push_back(i);
  std::vector<Batch> batches;
  for (auto& [lang, idx] : by_lang) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t at = 0; at < idx.size(); at += batch_size) {
      const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(batch_size));
      batches.push_back({lang, std::vector<std::size_t>(idx.begin() + at, idx.begin() + end)});
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace

double mean_loss(const AcousticModel<float>& model, std::span<const Example> examples) {
  double sum = 0;
  int n = 0;
  for (const Example& ex : examples) {
    const TierLosses l = model.loss(ex);
    if (!l.feasible) continue;
    sum += l.total;
    ++n;
  }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

TrainState train(AcousticModel<float>& model, Adadelta& optimizer,
                 std::span<const Example> train_set, std::span<const Example> dev_set,
                 const TrainOptions& options) {
  if (train_set.empty()) fail(ErrorCode::data_empty, "no training utterances");
  if (options.batch_size < 1 || options.patience < 1) {
    fail(ErrorCode::config_error, "batch_size and patience must be positive");
  }
  const bool encoder = options.scope == TrainScope::all;
  TrainState state;
  ParamMap<float> grads = model.zero_like();
  ParamMap<float> best = model.params();
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(epoch));
    EpochReport report;
    report.epoch = epoch;
    double total = 0;
    int feasible = 0;
    for (const Batch& batch : make_batches(train_set, options.batch_size, rng)) {
      for (auto& [name, g] : grads) g.setZero();
      int n = 0;
      for (std::size_t i : batch.items) {
        const TierLosses l = model.loss(train_set[i], &grads, encoder);
        if (!l.feasible) {
          ++report.skipped;
          continue;
        }
        total += l.total;
        for (const auto& [tier, v] : l.per_tier) report.train_tier_loss[tier] += v;
        ++n;
      }
      if (n == 0) continue;
      feasible += n;
      for (auto& [name, g] : grads) g /= static_cast<float>(n);
      const std::string head_prefix = "head/" + batch.lang + "/";
      optimizer.step(model.params(), grads, [&](const std::string& name) {
        return name.starts_with(head_prefix) || (encoder && is_encoder_param(name));
      });
    }
    if (feasible == 0) fail(ErrorCode::data_empty, "no training utterance fits its encoder length");
    report.train_loss = total / feasible;
    for (auto& [tier, v] : report.train_tier_loss) v /= feasible;
    report.dev_loss = dev_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : mean_loss(model, dev_set);
    state.epoch = epoch;
    state.history.push_back(report);
    if (!dev_set.empty()) {
      if (report.dev_loss < state.best_dev_loss) {
        state.best_dev_loss = report.dev_loss;
        state.best_epoch = epoch;
        state.bad_epochs = 0;
        best = model.params();
      } else {
        ++state.bad_epochs;
      }
    }
    if (options.on_epoch && !options.on_epoch(report)) break;
    if (!dev_set.empty() && state.bad_epochs >= options.patience) break;
  }
  if (!dev_set.empty() && state.best_epoch > 0) model.params() = best;
  return state;
}

Example make_example(const TokenizedUtterance& utt, MatrixF features,
                     const AlphabetSet& alphabets, const ModelVariant& variant,
                     const TieringOptions& options) {
  Example ex;
  ex.utt_id = utt.utt_id;
  ex.lang = utt.lang;
  ex.features = std::move(features);
  for (const auto& [tier, transcript] : build_tiers(utt.syllables, utt.lang, variant, options)) {
    auto it = alphabets.find({utt.lang, tier});
    if (it == alphabets.end()) {
      fail(ErrorCode::missing_head, "no " + std::string(to_string(tier)) +
                                        " alphabet for language '" + utt.lang + "'");
    }
    ex.labels[tier] = it->second.encode(transcript.symbols);
  }
  return ex;
}

LanguageModels train_language_models(std::span<const Example> examples,
                                     const AlphabetSet& alphabets) {
  LanguageModels out;
  for (const auto& [key, alpha] : alphabets) {
    std::vector<LabelSequence> seqs;
    for (const Example& ex : examples) {
      if (ex.lang != key.first) continue;
      auto it = ex.labels.find(key.second);
      if (it != ex.labels.end()) seqs.push_back(it->second);
    }
    const BigramLm lm = BigramLm::train(seqs, static_cast<int>(alpha.size()));
    out.emplace(key, BigramLm::from_table(lm.table().cast<float>().cast<double>()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: "TTCK", u32 version, u32 header length, JSON header, then one
// TPF1 block per manifest entry in manifest order.

namespace {

constexpr std::string_view kCkptMagic = "TTCK";
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

std::string lm_name(const AlphabetKey& key) {
  return "lm/" + key.first + "/" + std::string(to_string(key.second));
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const AcousticModel<float>& m = ckpt.model;
  json header;
  header["config"] = {{"input_dim", m.config().input_dim},
                      {"hidden_dim", m.config().hidden_dim},
                      {"fc_dim", m.config().fc_dim},
                      {"variant", m.config().variant}};
  const OptimizerConfig& oc = ckpt.optimizer.config();
  header["optimizer"] = {{"learning_rate", oc.learning_rate}, {"rho", oc.rho}, {"epsilon", oc.epsilon}};
  json alphas = json::array();
  for (const auto& [key, alpha] : m.alphabets()) {
    alphas.push_back({{"lang", key.first}, {"tier", to_string(key.second)}, {"symbols", alpha.symbols()}});
  }
  header["alphabets"] = alphas;
  json history = json::array();
  for (const EpochReport& r : ckpt.state.history) {
    json tiers = json::object();
    for (const auto& [t, v] : r.train_tier_loss) tiers[std::string(to_string(t))] = v;
    history.push_back({{"epoch", r.epoch}, {"train_loss", number_or_null(r.train_loss)},
                       {"dev_loss", number_or_null(r.dev_loss)}, {"tiers", tiers},
                       {"skipped", r.skipped}});
  }
  header["state"] = {{"epoch", ckpt.state.epoch},
                     {"best_dev_loss", number_or_null(ckpt.state.best_dev_loss)},
                     {"best_epoch", ckpt.state.best_epoch},
                     {"bad_epochs", ckpt.state.bad_epochs},
                     {"history", history}};

  std::vector<std::pair<std::string, const MatrixF*>> blocks;
  for (const auto& [name, p] : m.params()) blocks.emplace_back("param:" + name, &p);
  for (const auto& [name, p] : ckpt.optimizer.sq_grad()) blocks.emplace_back("sq_grad:" + name, &p);
  for (const auto& [name, p] : ckpt.optimizer.sq_delta()) blocks.emplace_back("sq_delta:" + name, &p);
  std::vector<MatrixF> lm_tables;
  lm_tables.reserve(ckpt.lms.size());
  for (const auto& [key, lm] : ckpt.lms) lm_tables.push_back(lm.table().cast<float>());
  std::size_t li = 0;
  for (const auto& [key, lm] : ckpt.lms) blocks.emplace_back(lm_name(key), &lm_tables[li++]);
  json manifest = json::array();
  for (const auto& [name, p] : blocks) manifest.push_back({{"name", name}, {"rows", p->rows()}, {"cols", p->cols()}});
  header["manifest"] = manifest;

  const std::string text = header.dump(1);
  std::string out(kCkptMagic);
  put_u32(out, kCkptVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& [name, p] : blocks) out += encode_tpf(*p);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kCkptMagic) {
    fail(ErrorCode::format_error, "not a checkpoint file");
  }
  if (get_u32(bytes, 4) != kCkptVersion) {
    fail(ErrorCode::format_error, "unsupported checkpoint version " + std::to_string(get_u32(bytes, 4)));
  }
  const std::uint32_t len = get_u32(bytes, 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(len)) fail(ErrorCode::format_error, "truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(12, len));
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, std::string("checkpoint header: ") + e.what());
  }
  try {
    ModelConfig mc;
    mc.input_dim = header.at("config").at("input_dim");
    mc.hidden_dim = header.at("config").at("hidden_dim");
    mc.fc_dim = header.at("config").at("fc_dim");
    mc.variant = header.at("config").at("variant");
    OptimizerConfig oc;
    oc.learning_rate = header.at("optimizer").at("learning_rate");
    oc.rho = header.at("optimizer").at("rho");
    oc.epsilon = header.at("optimizer").at("epsilon");
    AlphabetSet alphabets;
    for (const json& a : header.at("alphabets")) {
      const TierId tier = parse_tier_id(a.at("tier").get<std::string>());
      const std::string lang = a.at("lang");
      alphabets.emplace(AlphabetKey{lang, tier},
                        TierAlphabet(tier, lang, a.at("symbols").get<std::vector<std::string>>()));
    }
    Checkpoint ckpt;
    ckpt.optimizer = Adadelta(oc);
    const json& st = header.at("state");
    ckpt.state.epoch = st.at("epoch");
    ckpt.state.best_dev_loss = number_or(st.at("best_dev_loss"), kInf);
    ckpt.state.best_epoch = st.at("best_epoch");
    ckpt.state.bad_epochs = st.at("bad_epochs");
    for (const json& h : st.at("history")) {
      EpochReport r;
      r.epoch = h.at("epoch");
      r.train_loss = number_or(h.at("train_loss"), std::numeric_limits<double>::quiet_NaN());
      r.dev_loss = number_or(h.at("dev_loss"), std::numeric_limits<double>::quiet_NaN());
      r.skipped = h.at("skipped");
      for (const auto& [t, v] : h.at("tiers").items()) r.train_tier_loss[parse_tier_id(t)] = v;
      ckpt.state.history.push_back(r);
    }

    ParamMap<float> params;
    std::size_t offset = 12 + len;
    for (const json& entry : header.at("manifest")) {
      const std::string name = entry.at("name");
      MatrixF m = decode_tpf(bytes, offset);
      if (m.rows() != entry.at("rows").get<Eigen::Index>() ||
          m.cols() != entry.at("cols").get<Eigen::Index>()) {
        fail(ErrorCode::format_error, "block '" + name + "' does not match its manifest shape");
      }
      if (name.starts_with("param:")) {
        params.emplace(name.substr(6), std::move(m));
      } else if (name.starts_with("sq_grad:")) {
        ckpt.optimizer.sq_grad().emplace(name.substr(8), std::move(m));
      } else if (name.starts_with("sq_delta:")) {
        ckpt.optimizer.sq_delta().emplace(name.substr(9), std::move(m));
      } else if (name.starts_with("lm/")) {
        const auto parts = detail::split(name, '/');
        if (parts.size() != 3) fail(ErrorCode::format_error, "bad block name '" + name + "'");
        ckpt.lms.emplace(AlphabetKey{parts[1], parse_tier_id(parts[2])},
                         BigramLm::from_table(m.cast<double>()));
      } else {
        fail(ErrorCode::format_error, "unknown block '" + name + "'");
      }
    }
    if (offset != bytes.size()) fail(ErrorCode::format_error, "trailing bytes after checkpoint blocks");
    ckpt.model = AcousticModel<float>(mc, alphabets, std::move(params));
    return ckpt;
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Decoding

TierHypotheses decode_utterance(const Checkpoint& ckpt, const MatrixF& features,
                                const std::string& lang, const DecodeOptions& options) {
  const AcousticModel<float>& m = ckpt.model;
  for (TierId tier : m.variant().tiers()) m.alphabet(lang, tier);
  const MatrixF hidden = m.encode(features);
  TierHypotheses out;
  for (TierId tier : m.variant().tiers()) {
    const Matrix logits = m.logits(hidden, lang, tier).cast<double>();
    BeamOptions beam;
    beam.beam_width = options.beam_width;
    beam.lm_weight = options.lm_weight;
    auto it = ckpt.lms.find({lang, tier});
    beam.lm = it != ckpt.lms.end() && options.lm_weight != 0 ? &it->second : nullptr;
    const LabelSequence labels = beam_decode(logits, beam);
    out[tier] = m.alphabet(lang, tier).decode(labels);
  }
  return out;
}

std::vector<TierHypotheses> evaluate(const Checkpoint& ckpt, std::span<const Example> examples,
                                     const DecodeOptions& options) {
  std::vector<TierHypotheses> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) {
    out.push_back(decode_utterance(ckpt, ex.features, ex.lang, options));
  }
  return out;
}

}  // namespace tonetier
