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

// Acoustic front end: log-Mel filterbanks, autocorrelation F0, per-speaker
// Z-normalization, 16-bit PCM WAV input and synthetic feature rendering.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tonetier/ipa.hpp"
#include "tonetier/types.hpp"

namespace tonetier {

inline constexpr int kNumMelBins = 40;
inline constexpr double kWindowMs = 25.0;
inline constexpr double kShiftMs = 10.0;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kZnormEpsilon = 1e-8;
inline constexpr double kMinF0 = 50.0;
inline constexpr double kMaxF0 = 500.0;
inline constexpr double kVoicingThreshold = 0.3;

struct FeatureMatrix {
  Matrix frames;  // T x F, F = 40 or 41
  std::string utt_id;
  std::string speaker_id;
};

struct Waveform {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 16000;
};

int window_samples(int sample_rate);
int shift_samples(int sample_rate);
// 1 + floor((num_samples - window) / shift); throws TooShort below one window.
int num_frames(std::size_t num_samples, int sample_rate);

double hz_to_mel(double hz);  // throws NegativeFrequency
double mel_to_hz(double mel);

// Centre frequencies of the triangular filters, evenly spaced in Mel between
// 0 Hz and Nyquist.
std::vector<double> mel_center_frequencies(int sample_rate,
                                           int num_bins = kNumMelBins);

// T x 40 natural-log filterbank energies over 25 ms Hamming frames.
Matrix log_mel(std::span<const double> samples, int sample_rate);

// Per-frame F0 in Hz on the log_mel frame grid; 0 marks unvoiced frames.
std::vector<double> extract_f0(std::span<const double> samples,
                               int sample_rate);

// Appends hz_to_mel(f0) as an extra column (0 for unvoiced frames).
Matrix append_f0(const Matrix& mel, std::span<const double> f0);

// Normalizes every column to zero mean and unit variance using statistics
// pooled over all utterances of the same speaker.
void znorm_per_speaker(std::vector<FeatureMatrix>& utterances);

Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& wave);

// Synthetic rendering. Channels [0, kSpectralChannels) carry the phone
// template, the last four of the 40 Mel channels carry the pitch proxy, and
// an optional 41st channel carries Mel-scaled F0.
inline constexpr int kSpectralChannels = 36;
inline constexpr int kPitchChannel = 36;

struct SynthPhone {
  IpaSymbol symbol;
  int frames = 1;
};

struct SynthPlan {
  std::vector<SynthPhone> phones;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  bool with_f0 = false;
  std::vector<double> speaker_offset;  // empty, or one value per channel
};

// 40-dim template of a segment at relative position `position` in [0, 1]
// (diphthongs move from onset to offset quality). Pitch channels are zero.
// Throws UnknownTemplate.
Eigen::VectorXd phone_template(const IpaSymbol& symbol, double position = 0.0,
                               const PhoneTable& table = PhoneTable::builtin());

// Pitch proxy in [-1, 1] per frame for a tone description over `frames`
// frames; toneless vowels sit at the mid level.
std::vector<double> pitch_trajectory(const std::vector<ToneTarget>& tones,
                                     int frames);

Matrix synth_features(const SynthPlan& plan,
                      const PhoneTable& table = PhoneTable::builtin());

}  // namespace tonetier
