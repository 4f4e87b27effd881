// tests/test_audio.cpp

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

#include <cmath>
#include <filesystem>
#include <random>

#include "catch_amalgamated.hpp"
#include "xane/audio.hpp"

using namespace xane;
using Catch::Approx;

namespace {

Waveform random_wave(std::size_t n, std::uint64_t seed, double amp = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = u(rng);
  return w;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("xane_test_audio_" + name);
}

// Hand-built PCM16 mono wav at the given rate.
std::vector<std::uint8_t> pcm16_bytes(const std::vector<std::int16_t>& s, std::uint32_t rate) {
  std::vector<std::uint8_t> b{'R', 'I', 'F', 'F'};
  detail::put32(b, 36 + 2 * static_cast<std::uint32_t>(s.size()));
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(b, 16);
  detail::put16(b, 1);
  detail::put16(b, 1);
  detail::put32(b, rate);
  detail::put32(b, rate * 2);
  detail::put16(b, 2);
  detail::put16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  detail::put32(b, 2 * static_cast<std::uint32_t>(s.size()));
  for (auto v : s) detail::put16(b, static_cast<std::uint16_t>(v));
  return b;
}

}  // namespace

TEST_CASE("read_wav decodes PCM16 and rejects bad input", "[audio][wav]") {
  SECTION("one second of silence") {
    const auto w = parse_wav(pcm16_bytes(std::vector<std::int16_t>(16000, 0), 16000));
    REQUIRE(w.size() == 16000);
    for (double s : w.samples) REQUIRE(s == 0.0);
  }
  SECTION("full-scale positive value") {
    const auto w = parse_wav(pcm16_bytes({32767}, 16000));
    REQUIRE(w.samples[0] == 32767.0 / 32768.0);
  }
  SECTION("8 kHz file") {
    REQUIRE_THROWS_WITH(parse_wav(pcm16_bytes({0, 0}, 8000)),
                        Catch::Matchers::ContainsSubstring("unsupported sample rate"));
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(read_wav(temp_path("does_not_exist.wav")), UserError);
  }
  SECTION("24-bit PCM") {
    auto b = pcm16_bytes({0, 0, 0}, 16000);
    b[34] = 24;
    REQUIRE_THROWS_WITH(parse_wav(b), Catch::Matchers::ContainsSubstring("unsupported encoding"));
  }
}

TEST_CASE("wav round trip through disk", "[audio][wav]") {
  const auto w = random_wave(1234, 7);
  const auto f = temp_path("rt.wav");
  write_wav(f, w, WavEncoding::kFloat32);
  const auto r = read_wav(f);
  REQUIRE(r.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    REQUIRE(r.samples[i] == static_cast<double>(static_cast<float>(w.samples[i])));
  write_wav(f, w, WavEncoding::kPcm16);
  const auto q = read_wav(f);
  for (std::size_t i = 0; i < w.size(); ++i) REQUIRE(std::abs(q.samples[i] - w.samples[i]) <= 1.0 / 32768);
  std::filesystem::remove(f);
}

TEST_CASE("segment_1s tiles whole seconds", "[audio][segment]") {
  Waveform w;
  w.samples.assign(40000, 0.0);
  const auto segs = segment_1s(w);
  REQUIRE(segs.size() == 2);
  REQUIRE(segs[0].start_sample == 0);
  REQUIRE(segs[1].start_sample == 16000);
  w.samples.assign(14400, 0.0);
  REQUIRE(segment_1s(w).empty());
  w.samples.assign(16000, 0.0);
  REQUIRE(segment_1s(w).size() == 1);

  // Concatenation is a prefix of the input.
  w = random_wave(53000, 3);
  std::size_t expect = 0;
  for (const auto& s : segment_1s(w)) {
    REQUIRE(s.start_sample == expect);
    REQUIRE(s.end_sample() <= w.size());
    expect = s.end_sample();
  }
  REQUIRE(expect == 48000);
}

TEST_CASE("mix_at_snr scales noise to the requested SNR", "[audio][mix]") {
  Waveform t, n;
  t.samples.assign(1000, 0.3);
  n.samples.assign(1000, -0.3);
  SECTION("equal power at 0 dB keeps the noise") {
    const auto r = mix_at_snr(t, n, 0.0);
    REQUIRE(r.scaled_noise.samples[5] == Approx(-0.3).epsilon(1e-12));
  }
  SECTION("20 dB scales amplitude by 0.1") {
    const auto r = mix_at_snr(t, n, 20.0);
    REQUIRE(r.scaled_noise.samples[5] == Approx(-0.03).epsilon(1e-12));
    REQUIRE(r.mixed.samples[5] == Approx(0.27).epsilon(1e-12));
  }
  SECTION("zero noise") {
    Waveform z;
    z.samples.assign(1000, 0.0);
    REQUIRE_THROWS(mix_at_snr(t, z, 10.0));
    REQUIRE_THROWS(mix_at_snr(z, n, 10.0));
  }
  SECTION("round-trip SNR on random signals") {
    for (double snr : {-10.0, 0.0, 7.5, 30.0}) {
      const auto a = random_wave(5000, 11);
      const auto b = random_wave(6000, 12, 0.1);
      const auto r = mix_at_snr(a, b, snr);
      const double got = db10(mean_power(a.samples) / mean_power(r.scaled_noise.samples));
      REQUIRE(std::abs(got - snr) < 1e-9);
    }
  }
}

TEST_CASE("apply_peak_dbfs sets the peak", "[audio][gain]") {
  Waveform w;
  w.samples = {0.1, -0.5, 0.25};
  auto out = apply_peak_dbfs(w, 20.0 * std::log10(0.5));
  REQUIRE(peak_abs(out.samples) == Approx(0.5).epsilon(1e-12));
  w.samples = {1.0, -0.2};
  REQUIRE(peak_abs(apply_peak_dbfs(w, -20.0).samples) == Approx(0.1).epsilon(1e-12));
  REQUIRE(peak_abs(apply_peak_dbfs(w, 0.0).samples) == Approx(1.0).epsilon(1e-12));
  Waveform z;
  z.samples.assign(4, 0.0);
  REQUIRE_THROWS(apply_peak_dbfs(z, -3.0));

  const auto once = apply_peak_dbfs(random_wave(777, 5), -3.7);
  const auto twice = apply_peak_dbfs(once, -3.7);
  for (std::size_t i = 0; i < once.size(); ++i)
    REQUIRE(std::abs(twice.samples[i] - once.samples[i]) <= 1e-9 * std::abs(once.samples[i]) + 1e-15);
}

TEST_CASE("convolve matches the direct sum", "[audio][convolve]") {
  const auto x = random_wave(32, 21);
  SECTION("unit impulse is the identity") {
    const std::vector<double> h{1.0};
    REQUIRE(convolve(x, h).samples == x.samples);
  }
  SECTION("delayed half impulse") {
    const auto y = random_wave(1000, 22);
    std::vector<double> h(161, 0.0);
    h[160] = 0.5;
    const auto out = convolve(y, h);
    for (std::size_t i = 0; i < y.size(); ++i)
      REQUIRE(out.samples[i] == Approx(i < 160 ? 0.0 : 0.5 * y.samples[i - 160]).margin(1e-12));
  }
  SECTION("32-sample input with 8 taps against a brute-force oracle") {
    const auto h = random_wave(8, 23);
    const auto out = convolve(x, h.samples);
    for (std::size_t n = 0; n < x.size(); ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k)
        if (n >= k) acc += h.samples[k] * x.samples[n - k];
      REQUIRE(out.samples[n] == Approx(acc).margin(1e-12));
    }
  }
  SECTION("FFT path agrees with the direct path") {
    const auto y = random_wave(20000, 24);
    const auto h = random_wave(3000, 25, 0.05);
    const auto fast = convolve(std::span<const double>(y.samples), h.samples);
    const auto slow = convolve_direct(y.samples, h.samples);
    for (std::size_t i = 0; i < slow.size(); ++i) REQUIRE(std::abs(fast[i] - slow[i]) < 1e-6);
  }
  SECTION("linearity") {
    const auto a = random_wave(9000, 26), b = random_wave(9000, 27);
    const auto h = random_wave(500, 28, 0.1);
    Waveform mix;
    mix.samples.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix.samples[i] = 2.0 * a.samples[i] - 0.7 * b.samples[i];
    const auto lhs = convolve(mix, h.samples);
    const auto ca = convolve(a, h.samples), cb = convolve(b, h.samples);
    for (std::size_t i = 0; i < a.size(); ++i)
      REQUIRE(std::abs(lhs.samples[i] - (2.0 * ca.samples[i] - 0.7 * cb.samples[i])) < 1e-6);
  }
  SECTION("empty input") {
    Waveform e;
    REQUIRE_THROWS(convolve(e, x.samples));
  }
}
