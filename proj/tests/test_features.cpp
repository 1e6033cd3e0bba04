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

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tonetier/error.hpp"
#include "tonetier/features.hpp"
#include "tonetier/tpf.hpp"

using namespace tonetier;

namespace {

std::vector<double> sine(double hz, double seconds, int rate, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(n) / rate);
  }
  return x;
}

std::vector<double> pulse_train(double hz, double seconds, int rate) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate), 0.0);
  const int period = static_cast<int>(std::lround(rate / hz));
  for (std::size_t n = 0; n < x.size(); n += period) x[n] = 0.8;
  return x;
}

IpaSymbol vowel_with_tones(const std::string& ipa) {
  return tokenize_ipa(ipa).at(0).at(0);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tonetier_test_" + name)).string();
}

}  // namespace

TEST_CASE("frame count follows the framing formula") {
  CHECK(window_samples(16000) == 400);
  CHECK(shift_samples(16000) == 160);
  CHECK(window_samples(8000) == 200);
  CHECK(num_frames(16000, 16000) == 98);
  CHECK(num_frames(400, 16000) == 1);
  CHECK(num_frames(559, 16000) == 1);
  CHECK(num_frames(560, 16000) == 2);
  CHECK(log_mel(sine(440, 1.0, 16000), 16000).rows() == 98);
  CHECK(log_mel(sine(440, 1.0, 16000), 16000).cols() == 40);
  for (int n : {200, 201, 999, 4321}) {
    CHECK(log_mel(std::vector<double>(n, 0.1), 8000).rows() == 1 + (n - 200) / 80);
  }
}

TEST_CASE("log_mel errors") {
  std::vector<double> shortx(399, 0.0);
  CHECK_THROWS_AS(log_mel(shortx, 16000), Error);
  try {
    log_mel(shortx, 16000);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::too_short);
  }
  std::vector<double> bad(800, 0.0);
  bad[10] = std::nan("");
  try {
    log_mel(bad, 16000);
    FAIL("expected NonFiniteSample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite_sample);
  }
}

TEST_CASE("silence sits at the log floor") {
  Matrix m = log_mel(std::vector<double>(16000, 0.0), 16000);
  CHECK((m.array() == std::log(kLogFloor)).all());
}

TEST_CASE("a pure tone peaks in the filter centred nearest its frequency") {
  for (int rate : {8000, 16000}) {
    const auto centres = mel_center_frequencies(rate);
    for (double hz : {300.0, 1000.0, 2500.0}) {
      int nearest = 0;
      for (int m = 1; m < kNumMelBins; ++m) {
        if (std::abs(centres[m] - hz) < std::abs(centres[nearest] - hz)) nearest = m;
      }
      Matrix mel = log_mel(sine(hz, 0.5, rate), rate);
      for (Eigen::Index t = 0; t < mel.rows(); ++t) {
        Eigen::Index arg = 0;
        mel.row(t).maxCoeff(&arg);
        CHECK(arg == nearest);
      }
    }
  }
}

TEST_CASE("filter centres are evenly spaced in Mel up to Nyquist") {
  const auto c = mel_center_frequencies(16000);
  REQUIRE(c.size() == 40);
  const double step = hz_to_mel(8000) / 41;
  for (int m = 0; m < 40; ++m) CHECK(hz_to_mel(c[m]) == doctest::Approx(step * (m + 1)));
}

TEST_CASE("hz_to_mel values, monotonicity and errors") {
  CHECK(hz_to_mel(0) == 0);
  CHECK(hz_to_mel(700) == doctest::Approx(781.17).epsilon(1e-5));
  CHECK(hz_to_mel(1000) == doctest::Approx(999.99).epsilon(1e-5));
  double prev = -1;
  for (int f = 0; f <= 8000; ++f) {
    const double m = hz_to_mel(f);
    CHECK_MESSAGE(m > prev, f);
    prev = m;
  }
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
  try {
    hz_to_mel(-1);
    FAIL("expected NegativeFrequency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::negative_frequency);
  }
}

TEST_CASE("F0 of a pulse train") {
  for (int rate : {8000, 16000}) {
    for (double hz : {100.0, 200.0, 320.0}) {
      auto x = pulse_train(hz, 1.0, rate);
      auto f0 = extract_f0(x, rate);
      CHECK(f0.size() == static_cast<std::size_t>(num_frames(x.size(), rate)));
      int voiced = 0;
      for (double f : f0) {
        if (f == 0) continue;
        ++voiced;
        CHECK(std::abs(f - rate / std::round(rate / hz)) <= 5.0);
      }
      CHECK(voiced == static_cast<int>(f0.size()));
    }
  }
  auto f0 = extract_f0(pulse_train(200, 1.0, 16000), 16000);
  for (double f : f0) CHECK(f == doctest::Approx(200).epsilon(0.025));
}

TEST_CASE("F0 of a sine follows its frequency") {
  auto f0 = extract_f0(sine(150, 0.5, 16000), 16000);
  for (double f : f0) CHECK(f == doctest::Approx(150).epsilon(0.02));
}

TEST_CASE("F0 of white noise is mostly unvoiced") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int rate : {8000, 16000}) {
    std::vector<double> x(3 * rate);
    for (auto& s : x) s = nd(rng);
    auto f0 = extract_f0(x, rate);
    const auto unvoiced = std::count(f0.begin(), f0.end(), 0.0);
    CHECK(static_cast<double>(unvoiced) >= 0.9 * static_cast<double>(f0.size()));
  }
}

TEST_CASE("F0 of silence is zero and values stay in range") {
  auto f0 = extract_f0(std::vector<double>(8000, 0.0), 16000);
  for (double f : f0) CHECK(f == 0);
  auto g = extract_f0(sine(700, 0.3, 16000), 16000);
  for (double f : g) CHECK((f == 0 || (f >= 50 && f <= 500)));
}

TEST_CASE("append_f0 adds a Mel-scaled column") {
  Matrix mel = Matrix::Ones(3, 40);
  std::vector<double> f0 = {0, 700, 0};
  Matrix m = append_f0(mel, f0);
  REQUIRE(m.cols() == 41);
  CHECK(m(0, 40) == 0);
  CHECK(m(1, 40) == doctest::Approx(781.17).epsilon(1e-5));
  CHECK(m(2, 40) == 0);
  CHECK(m.leftCols(40) == mel);
  std::vector<double> unvoiced(3, 0.0);
  CHECK((append_f0(mel, unvoiced).col(40).array() == 0).all());
  std::vector<double> wrong(2, 0.0);
  try {
    append_f0(mel, wrong);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::length_mismatch);
  }
}

TEST_CASE("znorm pools statistics per speaker") {
  std::vector<FeatureMatrix> utts(3);
  utts[0].speaker_id = "s1";
  utts[0].frames = Matrix(2, 2);
  utts[0].frames << 1, 5, 3, 5;
  utts[1].speaker_id = "s1";
  utts[1].frames = Matrix(1, 2);
  utts[1].frames << 8, 5;
  utts[2].speaker_id = "s2";
  utts[2].frames = Matrix(1, 2);
  utts[2].frames << 42, -3;
  znorm_per_speaker(utts);
  // column 0 of s1: values 1, 3, 8; mean 4; population variance 26/3
  const double sd = std::sqrt(26.0 / 3.0);
  CHECK(utts[0].frames(0, 0) == doctest::Approx(-3 / sd));
  CHECK(utts[0].frames(1, 0) == doctest::Approx(-1 / sd));
  CHECK(utts[1].frames(0, 0) == doctest::Approx(4 / sd));
  // constant column and single-frame speaker go to zero
  CHECK(utts[0].frames.col(1).isZero());
  CHECK(utts[1].frames.col(1).isZero());
  CHECK(utts[2].frames.isZero());
}

TEST_CASE("znorm gives zero mean, unit variance and is idempotent") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(2.0, 3.0);
  std::vector<FeatureMatrix> utts;
  for (int i = 0; i < 6; ++i) {
    FeatureMatrix u;
    u.speaker_id = i % 2 ? "a" : "b";
    u.frames = Matrix(5 + i, 41);
    for (Eigen::Index k = 0; k < u.frames.size(); ++k) u.frames.data()[k] = nd(rng);
    utts.push_back(u);
  }
  znorm_per_speaker(utts);
  for (const char* spk : {"a", "b"}) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(41), sq = Eigen::VectorXd::Zero(41);
    double n = 0;
    for (const auto& u : utts) {
      if (u.speaker_id != spk) continue;
      sum += u.frames.colwise().sum().transpose();
      sq += u.frames.array().square().colwise().sum().matrix().transpose();
      n += static_cast<double>(u.frames.rows());
    }
    for (int c = 0; c < 41; ++c) {
      CHECK(sum[c] / n == doctest::Approx(0).epsilon(1e-9).scale(1));
      CHECK(sq[c] / n == doctest::Approx(1).epsilon(1e-9));
    }
  }
  auto again = utts;
  znorm_per_speaker(again);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    CHECK((again[i].frames - utts[i].frames).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("TPF1 layout is bit-exact") {
  MatrixF m(2, 3);
  m << 1.0f, -2.5f, 0.0f, 3.25f, 1e-30f, -0.0f;
  const std::string bytes = encode_tpf(m);
  REQUIRE(bytes.size() == 12 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "TPF1");
  CHECK(bytes[4] == 2);
  CHECK(bytes[8] == 3);
  // 1.0f = 0x3f800000, little-endian
  CHECK(static_cast<unsigned char>(bytes[12]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[15]) == 0x3f);
  // second value -2.5f = 0xc0200000
  CHECK(static_cast<unsigned char>(bytes[19]) == 0xc0);
  CHECK(static_cast<unsigned char>(bytes[18]) == 0x20);
  const std::string path = temp_path("m.tpf");
  write_tpf(path, m);
  MatrixF back = read_tpf(path);
  CHECK(encode_tpf(back) == bytes);
  CHECK(std::signbit(back(1, 2)));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(decode_tpf(bytes.substr(0, 20)), Error);
  CHECK_THROWS_AS(decode_tpf("TPX1" + bytes.substr(4)), Error);
}

TEST_CASE("WAV round trip feeds the same frames") {
  Waveform w{sine(220, 0.2, 16000), 16000};
  const std::string path = temp_path("a.wav");
  write_wav(path, w);
  Waveform back = read_wav(path);
  std::filesystem::remove(path);
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768);
  }
  CHECK(log_mel(back.samples, 16000).rows() == num_frames(w.samples.size(), 16000));
}

TEST_CASE("synth: one phone with zero noise repeats its template") {
  SynthPlan plan;
  plan.phones.push_back({parse_segment("k"), 10});
  Matrix m = synth_features(plan);
  REQUIRE(m.rows() == 10);
  REQUIRE(m.cols() == 40);
  const Eigen::VectorXd tmpl = phone_template(parse_segment("k"));
  for (int t = 0; t < 10; ++t) CHECK(m.row(t) == tmpl.transpose());
}

TEST_CASE("synth: a falling tone decreases the pitch channels linearly") {
  SynthPlan plan;
  plan.phones.push_back({vowel_with_tones("a˥˩"), 10});
  plan.with_f0 = true;
  Matrix m = synth_features(plan);
  REQUIRE(m.cols() == 41);
  const double step = m(1, kPitchChannel) - m(0, kPitchChannel);
  CHECK(step < 0);
  CHECK(m(0, kPitchChannel) == doctest::Approx(1.0));
  CHECK(m(9, kPitchChannel) == doctest::Approx(-1.0));
  for (int t = 1; t < 10; ++t) {
    CHECK(m(t, kPitchChannel) - m(t - 1, kPitchChannel) == doctest::Approx(step));
    CHECK(m(t, 40) < m(t - 1, 40));
  }
}

TEST_CASE("synth: similar phones have closer templates") {
  auto dist = [](const char* a, const char* b) {
    return (phone_template(parse_segment(a)) - phone_template(parse_segment(b))).norm();
  };
  CHECK(dist("p", "pʰ") < dist("p", "s"));
  CHECK(dist("i", "e") < dist("i", "a"));
  CHECK(dist("ɑʊ", "ɑo") < dist("ɑʊ", "i"));
}

TEST_CASE("synth: tone contours and voice marks are distinguishable") {
  auto render = [](const std::string& ipa) {
    SynthPlan plan;
    plan.phones.push_back({vowel_with_tones(ipa), 9});
    return synth_features(plan);
  };
  CHECK(render("a") != render("a˧"));
  CHECK(render("a˨˩") != render("a˨˩ʔ"));
  CHECK(render("a˨˩h") != render("a˨˩ʔ"));
  CHECK(render("a˨˩h").row(0) == render("a˨˩").row(0));
}

TEST_CASE("synth: fixed seed is deterministic and offsets apply") {
  SynthPlan plan;
  plan.phones = {{parse_segment("t"), 3}, {vowel_with_tones("a˧˥"), 6}};
  plan.noise_std = 0.5;
  plan.seed = 99;
  Matrix a = synth_features(plan), b = synth_features(plan);
  CHECK(encode_tpf(a) == encode_tpf(b));
  plan.seed = 100;
  CHECK(synth_features(plan) != a);
  plan.seed = 99;
  plan.speaker_offset.assign(40, 1.5);
  Matrix c = synth_features(plan);
  CHECK(((c - a).array() - 1.5).abs().maxCoeff() < 1e-12);
  plan.speaker_offset.assign(3, 0.0);
  CHECK_THROWS_AS(synth_features(plan), Error);
}

TEST_CASE("synth: unknown segment has no template") {
  IpaSymbol bogus;
  bogus.base = "Q";
  bogus.category = Category::consonant;
  SynthPlan plan;
  plan.phones.push_back({bogus, 2});
  try {
    synth_features(plan);
    FAIL("expected UnknownTemplate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_template);
  }
}
