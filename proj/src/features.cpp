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

#include "tonetier/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "text_util.hpp"
#include "tonetier/error.hpp"

namespace tonetier {

namespace {

void check_rate(int sample_rate) {
  if (sample_rate != 8000 && sample_rate != 16000) {
    fail(ErrorCode::config_error,
         "sample rate must be 8000 or 16000 Hz, got " + std::to_string(sample_rate));
  }
}

void check_samples(std::span<const double> samples, int sample_rate) {
  check_rate(sample_rate);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      fail(ErrorCode::non_finite_sample, "sample " + std::to_string(i) + " is not finite");
    }
  }
  num_frames(samples.size(), sample_rate);
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(int k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  int size() const { return n_; }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

// Triangular filters defined on the Mel axis, evaluated at FFT bin centres.
Matrix mel_filterbank(int sample_rate, int nfft, int num_bins) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(num_bins + 2);
  for (int m = 0; m < num_bins + 2; ++m) edges[m] = top * m / (num_bins + 1);
  const int num_freqs = nfft / 2 + 1;
  Matrix fb = Matrix::Zero(num_bins, num_freqs);
  for (int k = 0; k < num_freqs; ++k) {
    const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / nfft);
    for (int m = 0; m < num_bins; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      if (mel > lo && mel < hi) {
        fb(m, k) = mel <= mid ? (mel - lo) / (mid - lo) : (hi - mel) / (hi - mid);
      }
    }
  }
  return fb;
}

}  // namespace

int window_samples(int sample_rate) {
  return static_cast<int>(std::lround(sample_rate * kWindowMs / 1000.0));
}

int shift_samples(int sample_rate) {
  return static_cast<int>(std::lround(sample_rate * kShiftMs / 1000.0));
}

int num_frames(std::size_t num_samples, int sample_rate) {
  const auto w = static_cast<std::size_t>(window_samples(sample_rate));
  if (num_samples < w) {
    fail(ErrorCode::too_short, std::to_string(num_samples) +
                                   " samples is shorter than one window of " +
                                   std::to_string(w));
  }
  return 1 + static_cast<int>((num_samples - w) / shift_samples(sample_rate));
}

double hz_to_mel(double hz) {
  if (hz < 0 || std::isnan(hz)) {
    fail(ErrorCode::negative_frequency, "frequency " + std::to_string(hz) + " Hz");
  }
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(int sample_rate, int num_bins) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> out(num_bins);
  for (int m = 0; m < num_bins; ++m) out[m] = mel_to_hz(top * (m + 1) / (num_bins + 1));
  return out;
}

Matrix log_mel(std::span<const double> samples, int sample_rate) {
  check_samples(samples, sample_rate);
  const int w = window_samples(sample_rate);
  const int s = shift_samples(sample_rate);
  const int t_count = num_frames(samples.size(), sample_rate);
  const int nfft = next_pow2(w);
  const Matrix fb = mel_filterbank(sample_rate, nfft, kNumMelBins);

  std::vector<double> window(w);
  for (int n = 0; n < w; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (w - 1));
  }

  RealFft fft(nfft);
  Eigen::VectorXd power(nfft / 2 + 1);
  Matrix out(t_count, kNumMelBins);
  for (int t = 0; t < t_count; ++t) {
    double* in = fft.input();
    std::fill(in, in + nfft, 0.0);
    for (int n = 0; n < w; ++n) in[n] = samples[t * s + n] * window[n];
    fft.execute();
    for (int k = 0; k <= nfft / 2; ++k) power[k] = fft.power(k) / nfft;
    const Eigen::VectorXd energy = fb * power;
    for (int m = 0; m < kNumMelBins; ++m) {
      out(t, m) = std::log(std::max(energy[m], kLogFloor));
    }
  }
  return out;
}

std::vector<double> extract_f0(std::span<const double> samples, int sample_rate) {
  check_samples(samples, sample_rate);
  const int w = window_samples(sample_rate);
  const int s = shift_samples(sample_rate);
  const int t_count = num_frames(samples.size(), sample_rate);
  const int min_lag = static_cast<int>(std::ceil(sample_rate / kMaxF0));
  const int max_lag = std::min(w - 2, static_cast<int>(std::floor(sample_rate / kMinF0)));

  std::vector<double> f0(t_count, 0.0);
  std::vector<double> x(w);
  std::vector<double> r(max_lag + 2, 0.0);
  for (int t = 0; t < t_count; ++t) {
    double mean = 0;
    for (int n = 0; n < w; ++n) mean += samples[t * s + n];
    mean /= w;
    double energy = 0;
    for (int n = 0; n < w; ++n) {
      x[n] = samples[t * s + n] - mean;
      energy += x[n] * x[n];
    }
    if (energy < 1e-12 * w) continue;

    // Autocorrelation normalized by the zero-lag energy. Long lags overlap few
    // samples, so they are damped rather than rescaled.
    double best = -1;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      double xy = 0;
      for (int n = 0; n + lag < w; ++n) xy += x[n] * x[n + lag];
      r[lag] = xy / energy;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, r[lag]);
    }
    if (best < kVoicingThreshold) continue;

    // Smallest-lag local maximum close to the global one avoids
    // picking a multiple of the period.
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] < 0.9 * best || r[lag] < r[lag - 1] || r[lag] < r[lag + 1]) continue;
      const double denom = r[lag - 1] - 2 * r[lag] + r[lag + 1];
      const double delta = denom < 0 ? 0.5 * (r[lag - 1] - r[lag + 1]) / denom : 0.0;
      const double hz = sample_rate / (lag + std::clamp(delta, -0.5, 0.5));
      if (hz >= kMinF0 && hz <= kMaxF0) f0[t] = hz;
      break;
    }
  }
  return f0;
}

Matrix append_f0(const Matrix& mel, std::span<const double> f0) {
  if (static_cast<std::size_t>(mel.rows()) != f0.size()) {
    fail(ErrorCode::length_mismatch, std::to_string(mel.rows()) + " frames but " +
                                         std::to_string(f0.size()) + " F0 values");
  }
  Matrix out(mel.rows(), mel.cols() + 1);
  out.leftCols(mel.cols()) = mel;
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    out(t, mel.cols()) = f0[t] > 0 ? hz_to_mel(f0[t]) : 0.0;
  }
  return out;
}

void znorm_per_speaker(std::vector<FeatureMatrix>& utterances) {
  struct Stats {
    Eigen::VectorXd sum, sumsq;
    double count = 0;
  };
  std::map<std::string, Stats> stats;
  for (const FeatureMatrix& u : utterances) {
    Stats& st = stats[u.speaker_id];
    if (st.count == 0) {
      st.sum = Eigen::VectorXd::Zero(u.frames.cols());
      st.sumsq = Eigen::VectorXd::Zero(u.frames.cols());
    } else if (st.sum.size() != u.frames.cols()) {
      fail(ErrorCode::dim_mismatch, "speaker '" + u.speaker_id + "' mixes feature widths");
    }
    st.sum += u.frames.colwise().sum().transpose();
    st.sumsq += u.frames.array().square().colwise().sum().matrix().transpose();
    st.count += static_cast<double>(u.frames.rows());
  }
  for (FeatureMatrix& u : utterances) {
    const Stats& st = stats.at(u.speaker_id);
    if (st.count == 0) continue;
    const Eigen::VectorXd mean = st.sum / st.count;
    const Eigen::VectorXd var =
        (st.sumsq / st.count - mean.cwiseProduct(mean)).cwiseMax(0.0);
    const Eigen::RowVectorXd inv_std =
        var.cwiseMax(kZnormEpsilon).cwiseSqrt().cwiseInverse().transpose();
    u.frames = ((u.frames.rowwise() - mean.transpose()).array().rowwise() *
                inv_std.array())
                   .matrix();
  }
}

// ---------------------------------------------------------------------------
// WAV

namespace {

std::uint32_t le32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

void put_le(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  const std::string_view b = bytes;
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    fail(ErrorCode::format_error, "'" + path + "' is not a RIFF/WAVE file");
  }
  Waveform wave;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::string_view id = b.substr(at, 4);
    const std::uint32_t size = le32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) fail(ErrorCode::format_error, "truncated chunk in '" + path + "'");
    if (id == "fmt ") {
      if (size < 16 || le16(b, body) != 1 || le16(b, body + 2) != 1 || le16(b, body + 14) != 16) {
        fail(ErrorCode::format_error, "'" + path + "' is not 16-bit PCM mono");
      }
      wave.sample_rate = static_cast<int>(le32(b, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorCode::format_error, "data chunk before fmt in '" + path + "'");
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        wave.samples[i] = static_cast<std::int16_t>(le16(b, body + 2 * i)) / 32768.0;
      }
      return wave;
    }
    at = body + size + (size & 1);
  }
  fail(ErrorCode::format_error, "no data chunk in '" + path + "'");
}

void write_wav(const std::string& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out = "RIFF";
  put_le(out, 36 + 2 * n, 4);
  out += "WAVEfmt ";
  put_le(out, 16, 4);
  put_le(out, 1, 2);
  put_le(out, 1, 2);
  put_le(out, static_cast<std::uint32_t>(wave.sample_rate), 4);
  put_le(out, static_cast<std::uint32_t>(wave.sample_rate) * 2, 4);
  put_le(out, 2, 2);
  put_le(out, 16, 2);
  out += "data";
  put_le(out, 2 * n, 4);
  for (double s : wave.samples) {
    const long q = std::lround(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0);
    put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)), 2);
  }
  detail::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Synthetic rendering

namespace {

// Template magnitude per unit of each articulatory feature.
constexpr double kSegmentScale = 0.4;
constexpr double kPlaceStep = 0.4;
constexpr double kMannerStep = 0.6;
constexpr double kHeightStep = 0.8;
constexpr double kBacknessStep = 0.8;
constexpr double kBinaryStep = 0.5;
constexpr double kVoiceMarkScale = 1.0;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Fixed pseudo-random direction in template space, uniform in [-1, 1).
Eigen::VectorXd basis(std::string_view name) {
  std::mt19937_64 gen(fnv1a(name));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kNumMelBins);
  for (int i = 0; i < kSpectralChannels; ++i) {
    v[i] = static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0;
  }
  return v;
}

struct Bases {
  Eigen::VectorXd consonant = basis("category:consonant");
  Eigen::VectorXd vowel = basis("category:vowel");
  Eigen::VectorXd place = basis("feature:place");
  Eigen::VectorXd manner = basis("feature:manner");
  Eigen::VectorXd voicing = basis("feature:voicing");
  Eigen::VectorXd aspiration = basis("feature:aspiration");
  Eigen::VectorXd length = basis("feature:length");
  Eigen::VectorXd height = basis("feature:height");
  Eigen::VectorXd backness = basis("feature:backness");
  Eigen::VectorXd rounding = basis("feature:rounding");
};

const Bases& bases() {
  static const Bases b;
  return b;
}

double tone_to_hz(double pitch) { return 150.0 * std::pow(2.0, 0.5 * pitch); }

}  // namespace

Eigen::VectorXd phone_template(const IpaSymbol& symbol, double position,
                               const PhoneTable& table) {
  PhoneFeatureVector features;
  try {
    features = table.features(symbol);
  } catch (const Error& e) {
    fail(ErrorCode::unknown_template, "no template for '" + symbol.segment() + "'");
  }
  const Bases& b = bases();
  Eigen::VectorXd v = kSegmentScale * basis("segment:" + symbol.segment());
  if (const auto* c = std::get_if<ConsonantFeatures>(&features)) {
    v += b.consonant + kPlaceStep * c->place * b.place + kMannerStep * c->manner * b.manner +
         kBinaryStep * (c->voicing * b.voicing + c->aspiration * b.aspiration +
                        c->length * b.length);
  } else {
    const auto& f = std::get<VowelFeatures>(features);
    const double u = std::clamp(position, 0.0, 1.0);
    const double height = (1 - u) * f.onset.height + u * f.offset.height;
    const double backness = (1 - u) * f.onset.backness + u * f.offset.backness;
    const double rounding = (1 - u) * f.onset.rounding + u * f.offset.rounding;
    v += b.vowel + kHeightStep * height * b.height + kBacknessStep * backness * b.backness +
         kBinaryStep * (rounding * b.rounding + f.length * b.length +
                        f.aspiration * b.aspiration);
  }
  return v;
}

std::vector<double> pitch_trajectory(const std::vector<ToneTarget>& tones, int frames) {
  std::vector<double> levels;
  for (const ToneTarget& t : tones) {
    if (t.is_pitch()) levels.push_back((t.digit() - 3) / 2.0);
  }
  if (levels.empty()) levels.push_back(0.0);
  std::vector<double> out(frames);
  for (int i = 0; i < frames; ++i) {
    if (levels.size() == 1 || frames == 1) {
      out[i] = levels.front();
      continue;
    }
    const double pos = static_cast<double>(i) / (frames - 1) * (levels.size() - 1);
    const auto seg = std::min(static_cast<std::size_t>(pos), levels.size() - 2);
    const double u = pos - static_cast<double>(seg);
    out[i] = (1 - u) * levels[seg] + u * levels[seg + 1];
  }
  return out;
}

Matrix synth_features(const SynthPlan& plan, const PhoneTable& table) {
  const int width = plan.with_f0 ? kNumMelBins + 1 : kNumMelBins;
  if (!plan.speaker_offset.empty() && static_cast<int>(plan.speaker_offset.size()) != width) {
    fail(ErrorCode::dim_mismatch, "speaker offset has " +
                                      std::to_string(plan.speaker_offset.size()) +
                                      " values, expected " + std::to_string(width));
  }
  int total = 0;
  for (const SynthPhone& p : plan.phones) {
    if (p.frames < 1) fail(ErrorCode::config_error, "phone duration must be at least one frame");
    total += p.frames;
  }
  if (total == 0) fail(ErrorCode::too_short, "synthetic plan has no frames");

  const IpaSymbol glottal = parse_segment("ʔ", table);
  const IpaSymbol breathy = parse_segment("h", table);
  Matrix out = Matrix::Zero(total, width);
  int row = 0;
  for (const SynthPhone& p : plan.phones) {
    const bool vowel = p.symbol.category == Category::vowel;
    const std::vector<double> pitch =
        vowel ? pitch_trajectory(p.symbol.tone_targets, p.frames) : std::vector<double>();
    const bool toneless = vowel && !p.symbol.has_pitch();
    const auto marks = static_cast<int>(p.symbol.tone_targets.size());
    for (int i = 0; i < p.frames; ++i, ++row) {
      const double pos = p.frames > 1 ? static_cast<double>(i) / (p.frames - 1) : 0.0;
      out.row(row).head(kNumMelBins) = phone_template(p.symbol, pos, table).transpose();
      if (!vowel) continue;
      out(row, kPitchChannel) = pitch[i];
      out(row, kPitchChannel + 1) = pitch[i];
      out(row, kPitchChannel + 2) = pitch[i];
      out(row, kPitchChannel + 3) = toneless ? -1.0 : 1.0;
      if (plan.with_f0) out(row, kNumMelBins) = hz_to_mel(tone_to_hz(pitch[i]));
      // A voice mark colours the stretch of the vowel its position maps to.
      if (marks > 0) {
        const int slot = std::min(marks - 1, i * marks / p.frames);
        const ToneTarget& t = p.symbol.tone_targets[slot];
        if (t.is_voice_mark()) {
          const IpaSymbol& mark = t.kind == ToneTarget::Kind::glottal ? glottal : breathy;
          out.row(row).head(kNumMelBins) +=
              kVoiceMarkScale * phone_template(mark, 0.0, table).transpose();
        }
      }
    }
  }

  if (plan.noise_std > 0) {
    std::mt19937_64 gen(plan.seed);
    std::normal_distribution<double> noise(0.0, plan.noise_std);
    for (Eigen::Index t = 0; t < out.rows(); ++t) {
      for (int c = 0; c < kNumMelBins; ++c) out(t, c) += noise(gen);
      if (plan.with_f0 && out(t, kNumMelBins) > 0) out(t, kNumMelBins) += 10.0 * noise(gen);
    }
  }
  if (!plan.speaker_offset.empty()) {
    out.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(plan.speaker_offset.data(), width);
  }
  return out;
}

}  // namespace tonetier
