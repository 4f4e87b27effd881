// tests/test_metrics.cpp

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
#include <random>

#include "catch_amalgamated.hpp"
#include "xane/metrics.hpp"

using namespace xane;
using Catch::Approx;

namespace {

std::vector<double> two_impulses(double second, std::size_t direct = 100) {
  std::vector<double> h(direct + 16000, 0.0);
  h[direct] = 1.0;
  h[direct + 960] = second;  // +60 ms
  return h;
}

// h[k] = exp(-k / (tau * fs)) so that h^2 decays with time constant tau / 2.
std::vector<double> exponential_envelope(double tau_s, double length_s) {
  std::vector<double> h(static_cast<std::size_t>(length_s * kSampleRate));
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = std::exp(-static_cast<double>(k) / (tau_s * kSampleRate));
  return h;
}

Waveform tone(std::size_t n, double freq, double amp) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * kPi * freq * i / kSampleRate);
  return w;
}

}  // namespace

TEST_CASE("edc", "[metrics][edc]") {
  SECTION("single impulse") {
    std::vector<double> h(100, 0.0);
    h[0] = 0.7;
    const auto e = edc(h);
    REQUIRE(e.values_db[0] == 0.0);
    for (std::size_t i = 1; i < h.size(); ++i) REQUIRE(e.values_db[i] == kEdcFloorDb);
  }
  SECTION("two equal impulses") {
    std::vector<double> h(10, 0.0);
    h[0] = h[5] = 1.0;
    const auto e = edc(h);
    REQUIRE(e.values_db[1] == Approx(10.0 * std::log10(0.5)).margin(1e-12));
    REQUIRE(e.values_db[5] == Approx(-3.0103).margin(1e-4));
  }
  SECTION("exponential decay is linear in dB") {
    const double tau = 0.05;
    const auto e = edc(exponential_envelope(tau, 2.0));
    // The amplitude constant tau gives an energy slope of -8.686 / tau dB/s.
    const double slope = (e.values_db[3200] - e.values_db[1600]) / 0.1;
    REQUIRE(slope == Approx(-20.0 / std::log(10.0) / tau).epsilon(1e-6));
    for (std::size_t i = 1; i < e.values_db.size(); ++i) REQUIRE(e.values_db[i] <= e.values_db[i - 1]);
  }
  SECTION("zero energy") {
    std::vector<double> h(10, 0.0);
    REQUIRE_THROWS(edc(h));
  }
}

TEST_CASE("t60_from_edc on exponential envelopes", "[metrics][t60]") {
  for (double tau_ms : {30.0, 50.0, 100.0, 200.0, 400.0}) {
    const double tau = tau_ms / 1000.0;
    const double expect = 60.0 * tau_ms / (20.0 / std::log(10.0));
    const double got = t60_from_edc(edc(exponential_envelope(tau, std::max(1.0, 20 * tau))));
    INFO("tau " << tau_ms << " ms");
    REQUIRE(std::abs(got - expect) <= 0.05 * expect);
  }
  REQUIRE(60.0 * 50.0 / 8.686 == Approx(345.4).margin(0.1));
  REQUIRE(60.0 * 100.0 / 8.686 == Approx(690.8).margin(0.1));
  std::vector<double> single(1000, 0.0);
  single[10] = 1.0;
  REQUIRE_THROWS_WITH(t60_from_edc(edc(single)),
                      Catch::Matchers::ContainsSubstring("insufficient decay range"));
}

TEST_CASE("clarity and drr on two-impulse responses", "[metrics][clarity][drr]") {
  const auto h = two_impulses(0.5);
  const double expect = 10.0 * std::log10(1.0 / 0.25);
  REQUIRE(std::abs(clarity(h, 100, 50.0) - expect) < 0.01);
  REQUIRE(std::abs(clarity(h, 100, 5.0) - expect) < 0.01);
  REQUIRE(std::abs(drr(h, 100) - expect) < 0.01);
  REQUIRE(std::abs(drr(two_impulses(1.0), 100)) < 0.01);

  std::vector<double> single(500, 0.0);
  single[40] = 0.3;
  REQUIRE(clarity(single, 40, 50.0) == kRatioClampDb);
  REQUIRE(drr(single, 40) == kRatioClampDb);

  SECTION("scale invariance") {
    auto g = two_impulses(0.8);
    g[100 + 400] = 0.3;
    const double c50 = clarity(g, 100, 50.0), d = drr(g, 100);
    for (auto& v : g) v *= 17.0;
    REQUIRE(clarity(g, 100, 50.0) == Approx(c50).margin(1e-9));
    REQUIRE(drr(g, 100) == Approx(d).margin(1e-9));
  }
  SECTION("clarity grows with the boundary") {
    RoomSpec r;
    r.beta = 0.8;
    const auto rir = simulate_rir(r);
    double prev = -1e9;
    for (double ms = 1.0; ms <= 200.0; ms += 7.0) {
      const double c = clarity(rir, ms);
      REQUIRE(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("energy_vad and vad_fraction", "[metrics][vad]") {
  Waveform zero;
  zero.samples.assign(16000, 0.0);
  for (bool b : energy_vad(zero)) REQUIRE_FALSE(b);

  const auto loud = tone(16000, 440.0, 1.0);
  for (bool b : energy_vad(loud)) REQUIRE(b);

  Waveform half = tone(16000, 440.0, 0.5);
  for (std::size_t i = 8000; i < 16000; ++i) half.samples[i] = 0.0;
  const auto frames = energy_vad(half);
  REQUIRE(frames.size() == 100);
  const auto on = std::count(frames.begin(), frames.end(), true);
  REQUIRE(std::abs(on - 50) <= 1);

  std::vector<bool> f(100, true);
  const Segment seg{0, 16000};
  REQUIRE(vad_fraction(f, seg) == 1.0);
  std::fill(f.begin(), f.end(), false);
  REQUIRE(vad_fraction(f, seg) == 0.0);
  for (int i = 0; i < 20; ++i) f[i * 5] = true;
  REQUIRE(vad_fraction(f, seg) == 0.2);
}

TEST_CASE("segment_snr", "[metrics][snr]") {
  Waveform s = tone(32000, 300.0, 0.5);
  Waveform n;
  n.samples = s.samples;
  const Segment seg{16000, 16000};
  REQUIRE(segment_snr(s, n, seg).value() == Approx(0.0).margin(1e-12));
  for (auto& v : n.samples) v *= 0.1;
  REQUIRE(segment_snr(s, n, seg).value() == Approx(20.0).margin(1e-9));
  std::fill(n.samples.begin() + 16000, n.samples.end(), 0.0);
  REQUIRE_FALSE(segment_snr(s, n, seg).has_value());

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Waveform noise;
  noise.samples.resize(32000);
  for (auto& v : noise.samples) v = g(rng);
  const auto mix = mix_at_snr(s, noise, 12.5);
  REQUIRE(std::abs(segment_snr(s, mix.scaled_noise, {0, 32000}).value() - 12.5) < 1e-6);
}
