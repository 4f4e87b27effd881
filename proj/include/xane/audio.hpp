// include/xane/audio.hpp

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

#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "xane/common.hpp"
#include "xane/fft.hpp"

namespace xane {

/// Mono audio at 16 kHz. Samples are nominally in [-1, 1] but are never
/// clipped by the signal algebra below.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// A [start, start + length) sample range of a parent waveform.
struct Segment {
  std::size_t start_sample = 0;
  std::size_t length_samples = kSampleRate;

  std::size_t end_sample() const { return start_sample + length_samples; }
  bool operator==(const Segment&) const = default;
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Parses a RIFF/WAVE byte buffer. Multichannel input is averaged to mono.
inline Waveform parse_wav(std::span<const std::uint8_t> bytes,
                          const std::string& what = "<buffer>") {
  using detail::le16;
  using detail::le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw UserError(str_cat(what, ": not a RIFF/WAVE file"));

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16)
        throw UserError(str_cat(what, ": truncated fmt chunk"));
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the sub-format GUID.
      if (format == 0xFFFE && size >= 40 && avail >= 40)
        format = le16(chunk + 8 + 24);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr)
    throw UserError(str_cat(what, ": missing fmt or data chunk"));
  if (channels == 0) throw UserError(str_cat(what, ": zero channels"));
  if (rate != static_cast<std::uint32_t>(kSampleRate))
    throw UserError(str_cat(what, ": unsupported sample rate ", rate,
                            " (expected ", kSampleRate, ")"));

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw UserError(str_cat(what, ": unsupported encoding (format ", format,
                            ", ", bits, " bits)"));

  const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * channels;
  const std::size_t frames = data_size / frame_bytes;
  Waveform w;
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + i * frame_bytes + c * (bits / 8);
      if (pcm16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        const std::uint32_t u = le32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += f;
      }
    }
    w.samples[i] = acc / channels;
    if (!std::isfinite(w.samples[i]))
      throw UserError(str_cat(what, ": non-finite sample at ", i));
  }
  return w;
}

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError(str_cat("cannot open wav file ", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

inline std::vector<std::uint8_t> encode_wav(const Waveform& w,
                                            WavEncoding enc) {
  using detail::put16;
  using detail::put32;
  const bool pcm = enc == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(w.samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, pcm ? 1 : 3);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);
  for (double s : w.samples) {
    if (pcm) {
      const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put32(out, u);
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w,
                      WavEncoding enc = WavEncoding::kFloat32) {
  const auto bytes = encode_wav(w, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError(str_cat("cannot write wav file ", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

/// Tiles the waveform with 1 s segments; a trailing partial second is dropped.
inline std::vector<Segment> segment_1s(const Waveform& w) {
  std::vector<Segment> segs;
  const std::size_t n = w.size() / kSampleRate;
  segs.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    segs.push_back({i * static_cast<std::size_t>(kSampleRate),
                    static_cast<std::size_t>(kSampleRate)});
  return segs;
}

/// Mean square of x (0 for an empty span).
inline double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double peak_abs(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

struct MixResult {
  Waveform mixed;
  Waveform scaled_noise;
};

/// Adds `noise` (cropped to the target length) scaled to reach `snr_db`
/// relative to the target power. The scaled noise is returned as well so
/// exact per-segment SNR labels can be derived.
inline MixResult mix_at_snr(const Waveform& target, const Waveform& noise,
                            double snr_db) {
  if (noise.size() < target.size())
    throw Error("mix_at_snr: noise shorter than target");
  const std::span<const double> t(target.samples);
  const std::span<const double> n(noise.samples.data(), target.size());
  const double pt = mean_power(t);
  const double pn = mean_power(n);
  if (!(pt > 0.0)) throw Error("mix_at_snr: zero-power target");
  if (!(pn > 0.0)) throw Error("mix_at_snr: zero-power noise");
  const double gain = std::sqrt(pt / (pn * std::pow(10.0, snr_db / 10.0)));
  MixResult r;
  r.scaled_noise.samples.resize(target.size());
  r.mixed.samples.resize(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    r.scaled_noise.samples[i] = gain * n[i];
    r.mixed.samples[i] = t[i] + r.scaled_noise.samples[i];
  }
  return r;
}

/// Scales w so that its peak magnitude is 10^(peak_dbfs / 20).
inline Waveform apply_peak_dbfs(const Waveform& w, double peak_dbfs) {
  const double peak = peak_abs(w.samples);
  if (!(peak > 0.0)) throw Error("apply_peak_dbfs: zero signal");
  const double gain = from_db20(peak_dbfs) / peak;
  Waveform out = w;
  for (double& s : out.samples) s *= gain;
  return out;
}

/// Direct O(N*M) linear convolution truncated to x.size() samples.
inline std::vector<double> convolve_direct(std::span<const double> x,
                                           std::span<const double> h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0.0;
    const std::size_t kmax = std::min(h.size() - 1, n);
    for (std::size_t k = 0; k <= kmax; ++k) acc += h[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}

/// Linear convolution truncated to x.size() samples (FFT for large inputs).
inline std::vector<double> convolve(std::span<const double> x,
                                    std::span<const double> h) {
  if (x.empty() || h.empty()) throw Error("convolve: empty input");
  if (x.size() * h.size() <= 1u << 16) return convolve_direct(x, h);
  // Only the first x.size() outputs are kept, so taps beyond that are inert.
  const std::size_t taps = std::min(h.size(), x.size());
  const std::size_t n = next_pow2(x.size() + taps - 1);
  RealFft fft(n);
  std::vector<std::complex<double>> X(fft.bins()), H(fft.bins());
  fft.forward(x, X);
  fft.forward(h.first(taps), H);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= H[k];
  std::vector<double> y(x.size());
  fft.inverse(X, y);
  return y;
}

inline Waveform convolve(const Waveform& w, std::span<const double> h) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = convolve(std::span<const double>(w.samples), h);
  return out;
}

}  // namespace xane
