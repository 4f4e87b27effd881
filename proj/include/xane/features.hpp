// include/xane/features.hpp

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
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "xane/audio.hpp"
#include "xane/fft.hpp"

namespace xane {

/// Row-major T x D feature matrix with its frame hop.
struct FeatureMatrix {
  std::size_t num_frames = 0;
  std::size_t dim = 0;
  float hop_ms = 10.0f;
  bool normalized = false;
  std::vector<float> values;

  float& at(std::size_t t, std::size_t d) { return values[t * dim + d]; }
  float at(std::size_t t, std::size_t d) const { return values[t * dim + d]; }
  std::span<const float> row(std::size_t t) const {
    return std::span<const float>(values).subspan(t * dim, dim);
  }
};

struct MelConfig {
  std::size_t num_bins = 80;
  std::size_t frame_length = 400;  // 25 ms
  std::size_t frame_shift = 160;   // 10 ms
  std::size_t fft_size = 512;
  double low_hz = 0.0;
  double high_hz = 8000.0;
  double log_floor = 1e-10;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// Triangular mel filters over the one-sided power spectrum,
/// num_bins x (fft_size / 2 + 1), evaluated at exact bin frequencies.
inline std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg = {}) {
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.low_hz), hi = hz_to_mel(cfg.high_hz);
  std::vector<double> edges(cfg.num_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / (cfg.num_bins + 1);
  std::vector<std::vector<double>> fb(cfg.num_bins, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < cfg.num_bins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * kSampleRate / cfg.fft_size);
      if (mel > left && mel < right)
        fb[m][k] = mel <= center ? (mel - left) / (center - left)
                                 : (right - mel) / (right - center);
    }
  }
  return fb;
}

/// Log mel filterbank energies. Frames are centered at n * shift + shift / 2
/// with reflective padding, so one second yields exactly 100 frames.
inline FeatureMatrix melfb(const Waveform& w, const MelConfig& cfg = {}) {
  if (w.size() < cfg.frame_shift)
    throw Error("melfb: input shorter than one frame");
  const std::size_t frames = w.size() / cfg.frame_shift;
  const auto fb = mel_filterbank(cfg);
  const std::size_t bins = cfg.fft_size / 2 + 1;

  std::vector<double> window(cfg.frame_length);
  for (std::size_t i = 0; i < window.size(); ++i)  // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / cfg.frame_length);

  const auto n = static_cast<long long>(w.size());
  const auto reflect = [n](long long i) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return static_cast<std::size_t>(i);
  };

  FeatureMatrix out;
  out.num_frames = frames;
  out.dim = cfg.num_bins;
  out.hop_ms = static_cast<float>(1000.0 * cfg.frame_shift / kSampleRate);
  out.values.resize(frames * cfg.num_bins);

  RealFft fft(cfg.fft_size);
  std::vector<double> frame(cfg.frame_length);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> power(bins);
  const long long half = static_cast<long long>(cfg.frame_length / 2);
  for (std::size_t t = 0; t < frames; ++t) {
    const long long center =
        static_cast<long long>(t * cfg.frame_shift + cfg.frame_shift / 2);
    for (std::size_t i = 0; i < cfg.frame_length; ++i)
      frame[i] = window[i] * w.samples[reflect(center - half + static_cast<long long>(i))];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
    for (std::size_t m = 0; m < cfg.num_bins; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += fb[m][k] * power[k];
      out.values[t * cfg.num_bins + m] =
          static_cast<float>(std::log(std::max(e, cfg.log_floor)));
    }
  }
  return out;
}

/// Per-utterance mean and variance normalization of every coefficient.
/// Zero-variance coefficients become zeros.
inline FeatureMatrix mvn(const FeatureMatrix& f) {
  if (f.num_frames < 2) throw Error("mvn: need at least 2 frames");
  FeatureMatrix out = f;
  const double n = static_cast<double>(f.num_frames);
  for (std::size_t d = 0; d < f.dim; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < f.num_frames; ++t) mean += f.at(t, d);
    mean /= n;
    double var = 0.0;
    for (std::size_t t = 0; t < f.num_frames; ++t) {
      const double c = f.at(t, d) - mean;
      var += c * c;
    }
    var /= n;
    const double sd = std::sqrt(var);
    const bool flat = !(sd > 1e-8 * std::max(1.0, std::abs(mean)));
    for (std::size_t t = 0; t < f.num_frames; ++t)
      out.at(t, d) = flat ? 0.0f : static_cast<float>((f.at(t, d) - mean) / sd);
  }
  out.normalized = true;
  return out;
}

/// Frames per 1 s segment for a given hop; the hop must divide 1000 ms.
inline std::size_t frames_per_segment(double hop_ms) {
  if (!(hop_ms > 0.0)) throw UserError("frames_per_segment: hop must be positive");
  const double n = 1000.0 / hop_ms;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-6 || r < 1.0)
    throw UserError(str_cat("frames_per_segment: hop ", hop_ms,
                            " ms does not divide 1000 ms"));
  return static_cast<std::size_t>(r);
}

/// Copies frames [first, first + count) into a new matrix.
inline FeatureMatrix slice_frames(const FeatureMatrix& f, std::size_t first,
                                  std::size_t count) {
  if (first + count > f.num_frames) throw Error("slice_frames: out of range");
  FeatureMatrix out;
  out.num_frames = count;
  out.dim = f.dim;
  out.hop_ms = f.hop_ms;
  out.normalized = f.normalized;
  out.values.assign(f.values.begin() + static_cast<std::ptrdiff_t>(first * f.dim),
                    f.values.begin() + static_cast<std::ptrdiff_t>((first + count) * f.dim));
  return out;
}

// Feature file: "XFEA", u32 version, u32 T, u32 D, f32 hop_ms, u8 normalized,
// then T*D f32 row-major. All little-endian.
inline constexpr std::uint32_t kFeatureVersion = 1;

inline std::vector<std::uint8_t> encode_features(const FeatureMatrix& f) {
  using detail::put32;
  std::vector<std::uint8_t> out;
  out.reserve(21 + f.values.size() * 4);
  out.insert(out.end(), {'X', 'F', 'E', 'A'});
  put32(out, kFeatureVersion);
  put32(out, static_cast<std::uint32_t>(f.num_frames));
  put32(out, static_cast<std::uint32_t>(f.dim));
  std::uint32_t u;
  std::memcpy(&u, &f.hop_ms, 4);
  put32(out, u);
  out.push_back(f.normalized ? 1 : 0);
  for (float v : f.values) {
    std::memcpy(&u, &v, 4);
    put32(out, u);
  }
  return out;
}

inline FeatureMatrix decode_features(std::span<const std::uint8_t> b,
                                     const std::string& what = "<buffer>") {
  using detail::le32;
  if (b.size() < 4 || std::memcmp(b.data(), "XFEA", 4) != 0)
    throw UserError(str_cat(what, ": not a feature file"));
  if (b.size() < 21) throw UserError(str_cat(what, ": truncated header"));
  const std::uint32_t version = le32(b.data() + 4);
  if (version != kFeatureVersion)
    throw UserError(str_cat(what, ": feature file version ", version,
                            " (expected ", kFeatureVersion, ")"));
  FeatureMatrix f;
  f.num_frames = le32(b.data() + 8);
  f.dim = le32(b.data() + 12);
  std::uint32_t u = le32(b.data() + 16);
  std::memcpy(&f.hop_ms, &u, 4);
  f.normalized = b[20] != 0;
  const std::size_t count = f.num_frames * f.dim;
  if (b.size() - 21 < count * 4)
    throw UserError(str_cat(what, ": truncated payload (header says ",
                            f.num_frames, "x", f.dim, ")"));
  f.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    u = le32(b.data() + 21 + 4 * i);
    std::memcpy(&f.values[i], &u, 4);
    if (!std::isfinite(f.values[i]))
      throw UserError(str_cat(what, ": non-finite feature value"));
  }
  return f;
}

inline void write_features(const FeatureMatrix& f,
                           const std::filesystem::path& path) {
  const auto bytes = encode_features(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError(str_cat("cannot write ", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError(str_cat("cannot open feature file ", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_features(bytes, path.string());
}

}  // namespace xane
