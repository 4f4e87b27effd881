// include/xane/speechgen.hpp

// Copyright 2026  The xane Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "xane/audio.hpp"
#include "xane/common.hpp"

namespace xane {

/// Parameters of one synthetic talker.
struct Voice {
  double f0_hz = 120.0;
  double formant_scale = 1.0;  // vocal-tract length factor
  double breathiness = 0.05;   // aspiration noise relative to voicing
};

inline Voice random_voice(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Voice v;
  v.f0_hz = 85.0 + 170.0 * u(rng);
  // Higher voices tend to come with shorter vocal tracts.
  v.formant_scale = 0.9 + 0.25 * (v.f0_hz - 85.0) / 170.0 + 0.05 * (u(rng) - 0.5);
  v.breathiness = 0.02 + 0.08 * u(rng);
  return v;
}

namespace speechgen_detail {

// F1, F2, F3 (Hz) of a few adult vowels.
inline constexpr std::array<std::array<double, 3>, 8> kVowels{{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
    {520, 1190, 2390},  // uh
    {490, 1350, 1690},  // er
}};
inline constexpr std::array<double, 3> kBandwidths{80.0, 100.0, 160.0};

/// Two-pole resonator with per-sample retuning.
class Resonator {
 public:
  double step(double x, double freq, double bw) {
    const double t = 1.0 / kSampleRate;
    const double c = -std::exp(-2.0 * kPi * bw * t);
    const double b = 2.0 * std::exp(-kPi * bw * t) * std::cos(2.0 * kPi * freq * t);
    const double a = 1.0 - b - c;
    const double y = a * x + b * y1_ + c * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double y1_ = 0.0, y2_ = 0.0;
};

}  // namespace speechgen_detail

/// Formant-synthesized babble: voiced vowels with formant glides, fricative
/// noise bursts and pauses, deterministic in `seed`. Peak level is -3 dBFS.
inline Waveform synth_speech(const Voice& voice, double duration_s, std::uint64_t seed) {
  using namespace speechgen_detail;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);

  const auto total = static_cast<std::size_t>(duration_s * kSampleRate);
  Waveform w;
  w.samples.assign(total, 0.0);

  std::array<Resonator, 3> tract;
  Resonator fric;
  double phase = 0.0;
  double glottal_lp = 0.0, glottal_lp2 = 0.0;
  std::array<double, 3> formants = kVowels[0];
  for (auto& f : formants) f *= voice.formant_scale;

  std::size_t pos = static_cast<std::size_t>((0.02 + 0.1 * u(rng)) * kSampleRate);
  while (pos < total) {
    // Optional fricative onset.
    if (u(rng) < 0.45) {
      const auto len = static_cast<std::size_t>((0.04 + 0.07 * u(rng)) * kSampleRate);
      const double centre = 2500.0 + 3500.0 * u(rng);
      const double amp = 0.15 + 0.2 * u(rng);
      for (std::size_t i = 0; i < len && pos < total; ++i, ++pos) {
        const double env = std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
        w.samples[pos] = amp * env * fric.step(g(rng), centre, 900.0);
      }
    }
    // Vowel nucleus with a glide from the previous formants.
    const auto& target = kVowels[static_cast<std::size_t>(u(rng) * kVowels.size()) % kVowels.size()];
    const auto len = static_cast<std::size_t>((0.09 + 0.16 * u(rng)) * kSampleRate);
    const auto glide = static_cast<std::size_t>(0.035 * kSampleRate);
    const std::array<double, 3> start = formants;
    const double f0_start = voice.f0_hz * (0.9 + 0.2 * u(rng));
    const double f0_end = voice.f0_hz * (0.85 + 0.2 * u(rng));
    const double amp = 0.6 + 0.4 * u(rng);
    for (std::size_t i = 0; i < len && pos < total; ++i, ++pos) {
      const double t = static_cast<double>(i) / static_cast<double>(len);
      const double k = std::min(1.0, static_cast<double>(i) / static_cast<double>(glide));
      for (int f = 0; f < 3; ++f)
        formants[f] = start[f] + k * (target[f] * voice.formant_scale - start[f]);
      const double f0 = f0_start + t * (f0_end - f0_start);
      phase += f0 / kSampleRate;
      double pulse = 0.0;
      if (phase >= 1.0) {
        phase -= 1.0;
        pulse = 1.0;
      }
      // Spectral tilt of the glottal source.
      glottal_lp += 0.25 * (pulse - glottal_lp);
      glottal_lp2 += 0.35 * (glottal_lp - glottal_lp2);
      double x = glottal_lp2 + voice.breathiness * 0.05 * g(rng);
      double y = 0.0;
      for (int f = 0; f < 3; ++f) y += tract[f].step(x, formants[f], kBandwidths[f]) * (f == 0 ? 1.0 : 0.6);
      const double env = std::min({1.0, t / 0.12, (1.0 - t) / 0.2});
      w.samples[pos] = amp * env * y;
    }
    // Pause between syllables, sometimes a longer one between words.
    const double gap = u(rng) < 0.25 ? 0.15 + 0.3 * u(rng) : 0.02 + 0.06 * u(rng);
    pos += static_cast<std::size_t>(gap * kSampleRate);
  }
  if (peak_abs(w.samples) > 0.0) w = apply_peak_dbfs(w, -3.0);
  return w;
}

}  // namespace xane
