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

#include "tonetier/model.hpp"

#include <cmath>
#include <random>

#include "tonetier/error.hpp"

namespace tonetier {

namespace {

constexpr const char* kDirections[2] = {"fwd", "bwd"};

std::string lstm_name(int layer, int dir, std::string_view part) {
  return "encoder/l" + std::to_string(layer + 1) + "/" + kDirections[dir] + "/" +
         std::string(part);
}

std::uint64_t name_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <class S>
MatT<S> uniform(int rows, int cols, double bound, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  MatT<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(u(gen));
  return m;
}

// Concatenates adjacent frame pairs; an odd tail is paired with zeros.
template <class S>
MatT<S> pyramid(const MatT<S>& x) {
  const Eigen::Index rows = (x.rows() + 1) / 2;
  MatT<S> out = MatT<S>::Zero(rows, 2 * x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.block(i / 2, (i % 2) * x.cols(), 1, x.cols()) = x.row(i);
  }
  return out;
}

template <class S>
MatT<S> unpyramid(const MatT<S>& d, Eigen::Index rows) {
  const Eigen::Index cols = d.cols() / 2;
  MatT<S> out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    out.row(i) = d.block(i / 2, (i % 2) * cols, 1, cols);
  }
  return out;
}

template <class S>
struct LstmCache {
  MatT<S> gates;  // L x 4H activated: input, forget, candidate, output
  MatT<S> cell;
  MatT<S> hidden;
};

template <class S>
void lstm_forward(const MatT<S>& u, const MatT<S>& wx, const MatT<S>& wh,
                  const MatT<S>& b, bool reverse, LstmCache<S>& c) {
  const Eigen::Index len = u.rows();
  const Eigen::Index h = wh.cols();
  c.gates.noalias() = u * wx.transpose();
  c.gates.rowwise() += b.row(0);
  c.cell.resize(len, h);
  c.hidden.resize(len, h);
  Eigen::Matrix<S, 1, Eigen::Dynamic> hp = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(h);
  Eigen::Matrix<S, 1, Eigen::Dynamic> cp = hp;
  for (Eigen::Index s = 0; s < len; ++s) {
    const Eigen::Index t = reverse ? len - 1 - s : s;
    auto a = c.gates.row(t);
    a.noalias() += hp * wh.transpose();
    auto ifo_i = a.segment(0, 2 * h);
    ifo_i = (S(1) + (-ifo_i.array()).exp()).inverse().matrix();
    auto o = a.segment(3 * h, h);
    o = (S(1) + (-o.array()).exp()).inverse().matrix();
    auto g = a.segment(2 * h, h);
    g = g.array().tanh().matrix();
    cp = (a.segment(h, h).array() * cp.array() + a.segment(0, h).array() * g.array()).matrix();
    hp = (o.array() * cp.array().tanh()).matrix();
    c.cell.row(t) = cp;
    c.hidden.row(t) = hp;
  }
}

template <class S>
void lstm_backward(const MatT<S>& u, const LstmCache<S>& c, const MatT<S>& wx,
                   const MatT<S>& wh, bool reverse, const MatT<S>& dh_in,
                   MatT<S>& dwx, MatT<S>& dwh, MatT<S>& db, MatT<S>* du) {
  const Eigen::Index len = u.rows();
  const Eigen::Index h = wh.cols();
  using Row = Eigen::Array<S, 1, Eigen::Dynamic>;
  MatT<S> da(len, 4 * h);
  MatT<S> h_prev = MatT<S>::Zero(len, h);
  Row dh_next = Row::Zero(h), dc_next = Row::Zero(h);
  for (Eigen::Index s = len - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? len - 1 - s : s;
    const bool first = s == 0;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;
    const Row c_prev = first ? Row::Zero(h) : Row(c.cell.row(tp).array());
    if (!first) h_prev.row(t) = c.hidden.row(tp);
    const auto gi = c.gates.row(t).segment(0, h).array();
    const auto gf = c.gates.row(t).segment(h, h).array();
    const auto gg = c.gates.row(t).segment(2 * h, h).array();
    const auto go = c.gates.row(t).segment(3 * h, h).array();
    const Row tc = c.cell.row(t).array().tanh();
    const Row dh = dh_in.row(t).array() + dh_next;
    const Row dc = dh * go * (S(1) - tc.square()) + dc_next;
    da.row(t).segment(0, h) = (dc * gg * gi * (S(1) - gi)).matrix();
    da.row(t).segment(h, h) = (dc * c_prev * gf * (S(1) - gf)).matrix();
    da.row(t).segment(2 * h, h) = (dc * gi * (S(1) - gg.square())).matrix();
    da.row(t).segment(3 * h, h) = (dh * tc * go * (S(1) - go)).matrix();
    dc_next = dc * gf;
    dh_next = (da.row(t) * wh).array();
  }
  dwh.noalias() += da.transpose() * h_prev;
  dwx.noalias() += da.transpose() * u;
  db += da.colwise().sum();
  if (du) du->noalias() = da * wx;
}

}  // namespace

int encoded_length(int frames) { return ((frames + 1) / 2 + 1) / 2; }

std::string head_param_name(const std::string& lang, TierId tier, std::string_view part) {
  return "head/" + lang + "/" + std::string(to_string(tier)) + "/" + std::string(part);
}

bool is_encoder_param(const std::string& name) { return name.starts_with("encoder/"); }

template <class S>
MatT<S> head_logits(const MatT<S>& hidden, const MatT<S>& w, const MatT<S>& b) {
  if (hidden.cols() != w.cols() || b.rows() != 1 || b.cols() != w.rows()) {
    fail(ErrorCode::dim_mismatch,
         "hidden width " + std::to_string(hidden.cols()) + " vs head " +
             std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + " bias " +
             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  MatT<S> out = hidden * w.transpose();
  out.rowwise() += b.row(0);
  return out;
}

template MatT<float> head_logits(const MatT<float>&, const MatT<float>&, const MatT<float>&);
template MatT<double> head_logits(const MatT<double>&, const MatT<double>&,
                                  const MatT<double>&);

template <class S>
struct AcousticModel<S>::Cache {
  MatT<S> inputs[kEncoderLayers];
  LstmCache<S> lstm[kEncoderLayers][2];
  MatT<S> top;     // n x 2H
  MatT<S> hidden;  // n x d, after tanh
};

namespace {

AlphabetSet variant_alphabets(const AlphabetSet& all, int variant) {
  const ModelVariant v(variant);
  AlphabetSet out;
  for (const auto& [key, alpha] : all) {
    if (v.has(key.second)) out.emplace(key, alpha);
  }
  return out;
}

void check_config(const ModelConfig& c) {
  if (c.input_dim < 1 || c.hidden_dim < 1 || c.fc_dim < 1) {
    fail(ErrorCode::config_error, "model dimensions must be positive");
  }
  ModelVariant v(c.variant);
}

}  // namespace

template <class S>
AcousticModel<S>::AcousticModel(const ModelConfig& config, const AlphabetSet& alphabets,
                                std::uint64_t seed)
    : config_(config),
      variant_(config.variant),
      alphabets_(variant_alphabets(alphabets, config.variant)) {
  check_config(config_);
  const int h = config_.hidden_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (int layer = 0; layer < kEncoderLayers; ++layer) {
    const int in = layer == 0 ? config_.input_dim : 4 * h;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string wx = lstm_name(layer, dir, "wx");
      const std::string wh = lstm_name(layer, dir, "wh");
      const std::string b = lstm_name(layer, dir, "b");
      params_[wx] = uniform<S>(4 * h, in, bound, name_seed(seed, wx));
      params_[wh] = uniform<S>(4 * h, h, bound, name_seed(seed, wh));
      Mat bias = MatT<S>::Zero(1, 4 * h);
      bias.block(0, h, 1, h).setOnes();  // forget gate starts open
      params_[b] = bias;
    }
  }
  const double fc_bound = 1.0 / std::sqrt(2.0 * h);
  params_["encoder/fc/w"] = uniform<S>(config_.fc_dim, 2 * h, fc_bound, name_seed(seed, "fc"));
  params_["encoder/fc/b"] = MatT<S>::Zero(1, config_.fc_dim);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(config_.fc_dim));
  for (const auto& [key, alpha] : alphabets_) {
    const std::string w = head_param_name(key.first, key.second, "w");
    params_[w] = uniform<S>(static_cast<int>(alpha.size()), config_.fc_dim, head_bound,
                            name_seed(seed, w));
    params_[head_param_name(key.first, key.second, "b")] =
        MatT<S>::Zero(1, static_cast<Eigen::Index>(alpha.size()));
  }
}

template <class S>
AcousticModel<S>::AcousticModel(const ModelConfig& config, const AlphabetSet& alphabets,
                                Params params)
    : config_(config),
      variant_(config.variant),
      alphabets_(variant_alphabets(alphabets, config.variant)),
      params_(std::move(params)) {
  check_config(config_);
  const Params expected = AcousticModel(config_, alphabets_, 0).params_;
  for (const auto& [name, m] : expected) {
    auto it = params_.find(name);
    if (it == params_.end()) fail(ErrorCode::format_error, "missing parameter '" + name + "'");
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      fail(ErrorCode::dim_mismatch, "parameter '" + name + "' has shape " +
                                        std::to_string(it->second.rows()) + "x" +
                                        std::to_string(it->second.cols()));
    }
  }
  if (params_.size() != expected.size()) {
    fail(ErrorCode::format_error, "unexpected extra parameters");
  }
}

template <class S>
bool AcousticModel<S>::has_head(const std::string& lang, TierId tier) const {
  return alphabets_.count({lang, tier}) > 0;
}

template <class S>
const TierAlphabet& AcousticModel<S>::alphabet(const std::string& lang, TierId tier) const {
  auto it = alphabets_.find({lang, tier});
  if (it == alphabets_.end()) {
    fail(ErrorCode::missing_head,
         "no " + std::string(to_string(tier)) + " head for language '" + lang + "'");
  }
  return it->second;
}

template <class S>
std::vector<std::string> AcousticModel<S>::languages() const {
  std::vector<std::string> out;
  for (const auto& [key, alpha] : alphabets_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

template <class S>
void AcousticModel<S>::set_head(const TierAlphabet& alphabet, Mat w, Mat b) {
  if (!variant().has(alphabet.tier())) {
    fail(ErrorCode::config_error, "variant does not use the " +
                                      std::string(to_string(alphabet.tier())) + " tier");
  }
  const auto c = static_cast<Eigen::Index>(alphabet.size());
  if (w.rows() != c || w.cols() != config_.fc_dim || b.rows() != 1 || b.cols() != c) {
    fail(ErrorCode::dim_mismatch, "head shape does not match alphabet size " +
                                      std::to_string(c) + " and width " +
                                      std::to_string(config_.fc_dim));
  }
  alphabets_[{alphabet.lang(), alphabet.tier()}] = alphabet;
  params_[head_param_name(alphabet.lang(), alphabet.tier(), "w")] = std::move(w);
  params_[head_param_name(alphabet.lang(), alphabet.tier(), "b")] = std::move(b);
}

template <class S>
typename AcousticModel<S>::Mat AcousticModel<S>::forward(const Mat& features,
                                                         Cache* cache) const {
  if (features.rows() < 4) {
    fail(ErrorCode::input_too_short,
         std::to_string(features.rows()) + " frames; the encoder needs at least 4");
  }
  if (features.cols() != config_.input_dim) {
    fail(ErrorCode::dim_mismatch, "features have " + std::to_string(features.cols()) +
                                      " columns, model expects " +
                                      std::to_string(config_.input_dim));
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  const int h = config_.hidden_dim;
  Mat x = features;
  for (int layer = 0; layer < kEncoderLayers; ++layer) {
    c.inputs[layer] = layer == 0 ? x : pyramid<S>(x);
    Mat out(c.inputs[layer].rows(), 2 * h);
    for (int dir = 0; dir < 2; ++dir) {
      lstm_forward<S>(c.inputs[layer], params_.at(lstm_name(layer, dir, "wx")),
                      params_.at(lstm_name(layer, dir, "wh")),
                      params_.at(lstm_name(layer, dir, "b")), dir == 1, c.lstm[layer][dir]);
      out.middleCols(dir * h, h) = c.lstm[layer][dir].hidden;
    }
    x = std::move(out);
  }
  c.top = std::move(x);
  c.hidden = head_logits<S>(c.top, params_.at("encoder/fc/w"), params_.at("encoder/fc/b"));
  c.hidden = c.hidden.array().tanh().matrix();
  return c.hidden;
}

template <class S>
void AcousticModel<S>::backward(const Cache& c, const Mat& d_hidden, Params& grads) const {
  const int h = config_.hidden_dim;
  const Mat da = (d_hidden.array() * (S(1) - c.hidden.array().square())).matrix();
  grads.at("encoder/fc/w").noalias() += da.transpose() * c.top;
  grads.at("encoder/fc/b") += da.colwise().sum();
  Mat dx = da * params_.at("encoder/fc/w");
  for (int layer = kEncoderLayers - 1; layer >= 0; --layer) {
    const Mat& u = c.inputs[layer];
    Mat du = Mat::Zero(u.rows(), u.cols());
    for (int dir = 0; dir < 2; ++dir) {
      Mat du_dir;
      lstm_backward<S>(u, c.lstm[layer][dir], params_.at(lstm_name(layer, dir, "wx")),
                       params_.at(lstm_name(layer, dir, "wh")), dir == 1,
                       Mat(dx.middleCols(dir * h, h)), grads.at(lstm_name(layer, dir, "wx")),
                       grads.at(lstm_name(layer, dir, "wh")),
                       grads.at(lstm_name(layer, dir, "b")), layer > 0 ? &du_dir : nullptr);
      if (layer > 0) du += du_dir;
    }
    if (layer > 0) dx = unpyramid<S>(du, c.inputs[layer - 1].rows());
  }
}

template <class S>
typename AcousticModel<S>::Mat AcousticModel<S>::encode(const Mat& features) const {
  return forward(features, nullptr);
}

template <class S>
typename AcousticModel<S>::Mat AcousticModel<S>::logits(const Mat& hidden,
                                                        const std::string& lang,
                                                        TierId tier) const {
  alphabet(lang, tier);
  return head_logits<S>(hidden, params_.at(head_param_name(lang, tier, "w")),
                        params_.at(head_param_name(lang, tier, "b")));
}

template <class S>
TierLosses AcousticModel<S>::loss(const Example& ex, Params* grads, bool encoder_grads) const {
  for (TierId tier : variant().tiers()) alphabet(ex.lang, tier);
  Cache cache;
  const Mat hidden = forward(ex.features.cast<S>(), &cache);
  TierLosses out;
  std::map<TierId, Matrix> d_logits;
  for (TierId tier : variant().tiers()) {
    auto it = ex.labels.find(tier);
    if (it == ex.labels.end()) {
      fail(ErrorCode::missing_tier, "utterance '" + ex.utt_id + "' has no " +
                                        std::string(to_string(tier)) + " labels");
    }
    const Matrix lg = logits(hidden, ex.lang, tier).template cast<double>();
    CtcResult r = ctc_loss(lg, it->second, grads != nullptr);
    out.per_tier[tier] = r.loss;
    out.total += r.loss;
    out.feasible = out.feasible && r.feasible;
    if (grads) d_logits[tier] = std::move(r.gradient);
  }
  if (!grads || !out.feasible) return out;

  Mat d_hidden = Mat::Zero(hidden.rows(), hidden.cols());
  for (const auto& [tier, dl_double] : d_logits) {
    const Mat dl = dl_double.template cast<S>();
    const std::string w = head_param_name(ex.lang, tier, "w");
    grads->at(w).noalias() += dl.transpose() * hidden;
    grads->at(head_param_name(ex.lang, tier, "b")) += dl.colwise().sum();
    if (encoder_grads) d_hidden.noalias() += dl * params_.at(w);
  }
  if (encoder_grads) backward(cache, d_hidden, *grads);
  return out;
}

template <class S>
typename AcousticModel<S>::Params AcousticModel<S>::zero_like() const {
  Params out;
  for (const auto& [name, m] : params_) out.emplace(name, Mat::Zero(m.rows(), m.cols()));
  return out;
}

template class AcousticModel<float>;
template class AcousticModel<double>;

}  // namespace tonetier
