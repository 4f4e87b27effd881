// include/xane/metrics.hpp

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

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "xane/audio.hpp"
#include "xane/rir.hpp"

namespace xane {

inline constexpr double kEdcFloorDb = -300.0;
inline constexpr double kRatioClampDb = 60.0;
inline constexpr std::size_t kVadFrame = kSampleRate / 100;  // 10 ms

/// Schroeder backward-integrated energy in dB relative to total energy.
struct EnergyDecayCurve {
  std::vector<double> values_db;
  int sample_rate = kSampleRate;
};

inline EnergyDecayCurve edc(std::span<const double> h) {
  EnergyDecayCurve out;
  out.values_db.resize(h.size());
  double total = 0.0;
  for (double v : h) total += v * v;
  if (!(total > 0.0)) throw Error("edc: zero-energy impulse response");
  double tail = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    tail += h[i] * h[i];
    const double ratio = tail / total;
    out.values_db[i] =
        ratio > 1e-30 ? std::min(0.0, db10(ratio)) : kEdcFloorDb;
  }
  // Round-off in the backward sum can leave tiny upward steps.
  for (std::size_t i = 1; i < out.values_db.size(); ++i)
    out.values_db[i] = std::min(out.values_db[i], out.values_db[i - 1]);
  if (!out.values_db.empty()) out.values_db[0] = 0.0;
  return out;
}

inline EnergyDecayCurve edc(const Rir& h) {
  return edc(std::span<const double>(h.samples));
}

/// T60 in ms from a least-squares fit of the EDC between its -5 dB and
/// -25 dB crossings, extrapolated to 60 dB of decay.
inline double t60_from_edc(const EnergyDecayCurve& curve) {
  const auto& v = curve.values_db;
  std::size_t i5 = v.size(), i25 = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i5 == v.size() && v[i] <= -5.0) i5 = i;
    if (v[i] <= -25.0) {
      i25 = i;
      break;
    }
  }
  if (i25 == v.size() || v[i25] <= kEdcFloorDb)
    throw Error("t60_from_edc: insufficient decay range");
  // A single-sample jump across both crossings still needs two points.
  if (i25 == i5) {
    if (i5 == 0) throw Error("t60_from_edc: insufficient decay range");
    --i5;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(i25 - i5 + 1);
  for (std::size_t i = i5; i <= i25; ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += v[i];
    sxx += x * x;
    sxy += x * v[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);  // dB/sample
  if (!(slope < 0.0)) throw Error("t60_from_edc: non-decaying curve");
  return -60.0 / slope / curve.sample_rate * 1000.0;
}

namespace detail {
inline double clamped_ratio_db(double num, double den) {
  if (!(den > 0.0)) return kRatioClampDb;
  if (!(num > 0.0)) return -kRatioClampDb;
  return std::clamp(db10(num / den), -kRatioClampDb, kRatioClampDb);
}
}  // namespace detail

/// Early-to-late energy ratio in dB with the boundary measured from the
/// direct-path arrival (C50 for 50 ms, C5 for 5 ms), clamped to +-60 dB.
inline double clarity(std::span<const double> h, std::size_t direct_index,
                      double boundary_ms) {
  const auto boundary = direct_index + static_cast<std::size_t>(std::llround(
                                           boundary_ms * kSampleRate / 1000.0));
  double early = 0.0, late = 0.0;
  for (std::size_t k = direct_index; k < h.size(); ++k)
    (k < boundary ? early : late) += h[k] * h[k];
  if (!(early + late > 0.0)) throw Error("clarity: zero-energy RIR");
  return detail::clamped_ratio_db(early, late);
}

inline double clarity(const Rir& h, double boundary_ms) {
  return clarity(h.samples, h.direct_index, boundary_ms);
}

/// Direct (+-2.5 ms around the direct arrival) to remaining energy, in dB.
inline double drr(std::span<const double> h, std::size_t direct_index) {
  const std::size_t half = kSampleRate / 400;  // 2.5 ms
  const std::size_t lo = direct_index >= half ? direct_index - half : 0;
  const std::size_t hi = direct_index + half;
  double direct = 0.0, rest = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k)
    (k >= lo && k <= hi ? direct : rest) += h[k] * h[k];
  return detail::clamped_ratio_db(direct, rest);
}

inline double drr(const Rir& h) { return drr(h.samples, h.direct_index); }

/// Per-10 ms frame activity of clean speech: a frame is active when its RMS
/// exceeds max(loudest frame - 40 dB, -60 dBFS).
inline std::vector<bool> energy_vad(const Waveform& clean) {
  const std::size_t frames = clean.size() / kVadFrame;
  std::vector<double> level_db(frames);
  double peak_db = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < frames; ++f) {
    const double p = mean_power(
        std::span<const double>(clean.samples).subspan(f * kVadFrame, kVadFrame));
    level_db[f] = p > 0.0 ? db10(p) : -std::numeric_limits<double>::infinity();
    peak_db = std::max(peak_db, level_db[f]);
  }
  const double threshold = std::max(peak_db - 40.0, -60.0);
  std::vector<bool> active(frames);
  for (std::size_t f = 0; f < frames; ++f) active[f] = level_db[f] > threshold;
  return active;
}

/// Fraction of active VAD frames inside a segment.
inline double vad_fraction(const std::vector<bool>& frames, const Segment& seg) {
  const std::size_t first = seg.start_sample / kVadFrame;
  const std::size_t count = seg.length_samples / kVadFrame;
  if (count == 0) return 0.0;
  std::size_t on = 0;
  for (std::size_t f = first; f < first + count && f < frames.size(); ++f)
    on += frames[f] ? 1 : 0;
  return static_cast<double>(on) / static_cast<double>(count);
}

/// Segment SNR from the exact signal and scaled-noise components; absent
/// when the segment carries no noise.
inline std::optional<double> segment_snr(const Waveform& signal,
                                         const Waveform& scaled_noise,
                                         const Segment& seg) {
  const auto take = [&](const Waveform& w) {
    return std::span<const double>(w.samples).subspan(seg.start_sample,
                                                      seg.length_samples);
  };
  const double pn = mean_power(take(scaled_noise));
  if (!(pn > 0.0)) return std::nullopt;
  return db10(mean_power(take(signal)) / pn);
}

}  // namespace xane
