// include/xane/estoi.hpp

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

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "xane/audio.hpp"
#include "xane/fft.hpp"

namespace xane {

namespace estoi_detail {

inline constexpr int kFs = 10000;
inline constexpr std::size_t kFrame = 256;
inline constexpr std::size_t kHop = 128;
inline constexpr std::size_t kNfft = 512;
inline constexpr std::size_t kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr std::size_t kSegFrames = 30;  // 384 ms
inline constexpr double kDynRange = 40.0;

/// Rational resampler (Kaiser-windowed sinc, beta 5, 10 zero crossings per
/// side at the lower rate), mirroring scipy.signal.resample_poly defaults.
inline std::vector<double> resample_poly(std::span<const double> x, int up,
                                         int down) {
  const int max_rate = std::max(up, down);
  const double fc = 1.0 / max_rate;
  const int half = 10 * max_rate;
  const int taps = 2 * half + 1;
  std::vector<double> h(taps);
  const double beta = 5.0;
  const double i0b = std::cyl_bessel_i(0.0, beta);
  double sum = 0.0;
  for (int k = 0; k < taps; ++k) {
    const double t = k - half;
    const double arg = kPi * fc * t;
    const double sinc = t == 0 ? 1.0 : std::sin(arg) / arg;
    const double r = 2.0 * k / (taps - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0b;
    h[k] = fc * sinc * win;
    sum += h[k];
  }
  for (double& v : h) v *= up / sum;

  const std::size_t n_out = (x.size() * up + down - 1) / down;
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    const long long t = static_cast<long long>(m) * down + half;
    long long n_hi = t / up;
    long long n_lo = (t - taps + 1 + up - 1) / up;
    if (t - taps + 1 < 0) n_lo = 0;
    n_hi = std::min<long long>(n_hi, static_cast<long long>(x.size()) - 1);
    double acc = 0.0;
    for (long long n = std::max<long long>(n_lo, 0); n <= n_hi; ++n)
      acc += x[n] * h[t - n * up];
    y[m] = acc;
  }
  return y;
}

inline std::vector<double> hann_inner(std::size_t n) {
  // numpy.hanning(n + 2)[1:-1]
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * (i + 1) / (n + 1));
  return w;
}

/// Drops frames of both signals where the clean frame is more than 40 dB
/// below the loudest clean frame, then overlap-adds what remains.
inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = hann_inner(kFrame);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + kFrame <= x.size(); i += kHop) starts.push_back(i);
  std::vector<double> energy(starts.size());
  double max_e = -1e300;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kFrame; ++k) {
      const double v = w[k] * x[starts[f] + k];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + 2.220446049250313e-16);
    max_e = std::max(max_e, energy[f]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < starts.size(); ++f)
    if (max_e - kDynRange - energy[f] < 0.0) keep.push_back(starts[f]);
  const std::size_t len = keep.empty() ? 0 : (keep.size() - 1) * kHop + kFrame;
  std::vector<double> xs(len, 0.0), ys(len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    for (std::size_t k = 0; k < kFrame; ++k) {
      xs[j * kHop + k] += w[k] * x[keep[j] + k];
      ys[j * kHop + k] += w[k] * y[keep[j] + k];
    }
  }
  x.swap(xs);
  y.swap(ys);
}

/// One-third octave band envelopes, kBands x frames (band-major).
inline std::vector<std::vector<double>> third_octave_envelopes(
    const std::vector<double>& x) {
  const auto w = hann_inner(kFrame);
  const std::size_t bins = kNfft / 2 + 1;
  std::vector<std::pair<std::size_t, std::size_t>> band(kBands);
  const auto nearest_bin = [&](double freq) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * kFs / kNfft;
      const double d = (f - freq) * (f - freq);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    return best;
  };
  for (std::size_t k = 0; k < kBands; ++k) {
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    band[k] = {nearest_bin(lo), nearest_bin(hi)};
  }

  std::vector<std::vector<double>> env(kBands);
  RealFft fft(kNfft);
  std::vector<double> frame(kFrame);
  std::vector<std::complex<double>> spec(bins);
  // Same frame range as the reference STFT: starts strictly below len - N.
  for (std::size_t i = 0; i + kFrame < x.size(); i += kHop) {
    for (std::size_t k = 0; k < kFrame; ++k) frame[k] = w[k] * x[i + k];
    fft.forward(frame, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double acc = 0.0;
      for (std::size_t j = band[b].first; j < band[b].second; ++j)
        acc += std::norm(spec[j]);
      env[b].push_back(std::sqrt(acc));
    }
  }
  return env;
}

/// Zero-mean, unit-norm rows (band trajectories), then the same for columns
/// (spectra), over a kBands x kSegFrames block.
inline void row_col_normalize(std::vector<double>& m) {
  constexpr std::size_t R = kBands, C = kSegFrames;
  constexpr double tiny = 1e-300;
  for (std::size_t r = 0; r < R; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < C; ++c) mean += m[r * C + c];
    mean /= C;
    double ss = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      m[r * C + c] -= mean;
      ss += m[r * C + c] * m[r * C + c];
    }
    const double inv = 1.0 / std::sqrt(ss + tiny);
    for (std::size_t c = 0; c < C; ++c) m[r * C + c] *= inv;
  }
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += m[r * C + c];
    mean /= R;
    double ss = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      m[r * C + c] -= mean;
      ss += m[r * C + c] * m[r * C + c];
    }
    const double inv = 1.0 / std::sqrt(ss + tiny);
    for (std::size_t r = 0; r < R; ++r) m[r * C + c] *= inv;
  }
}

}  // namespace estoi_detail

/// Extended short-time objective intelligibility of `degraded` against the
/// sample-aligned `clean` reference. Roughly in [0, 1]; 1 for identical input.
inline double estoi(const Waveform& clean, const Waveform& degraded) {
  using namespace estoi_detail;
  if (clean.size() != degraded.size())
    throw Error("estoi: clean and degraded lengths differ");
  auto x = resample_poly(clean.samples, 5, 8);
  auto y = resample_poly(degraded.samples, 5, 8);
  remove_silent_frames(x, y);
  const auto xe = third_octave_envelopes(x);
  const auto ye = third_octave_envelopes(y);
  const std::size_t frames = xe[0].size();
  if (frames < kSegFrames)
    throw Error("estoi: less than 384 ms of active speech");

  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(kBands * kSegFrames), ys(kBands * kSegFrames);
  for (std::size_t m = kSegFrames; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      for (std::size_t c = 0; c < kSegFrames; ++c) {
        xs[b * kSegFrames + c] = xe[b][m - kSegFrames + c];
        ys[b * kSegFrames + c] = ye[b][m - kSegFrames + c];
      }
    }
    row_col_normalize(xs);
    row_col_normalize(ys);
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += xs[i] * ys[i];
    total += acc / kSegFrames;
    ++count;
  }
  return std::max(-1.0, total / static_cast<double>(count));
}

}  // namespace xane
