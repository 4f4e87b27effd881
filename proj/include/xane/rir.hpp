// include/xane/rir.hpp

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
#include <span>
#include <vector>

#include "xane/audio.hpp"
#include "xane/common.hpp"

namespace xane {

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Shoebox room with one reflection coefficient shared by all six walls.
/// max_order < 0 and length_s <= 0 select the defaults below.
struct RoomSpec {
  Vec3 dims{5.0, 4.0, 3.0};
  double beta = 0.5;
  Vec3 src{1.0, 1.0, 1.0};
  Vec3 mic{3.0, 2.0, 1.5};
  double c = 343.0;
  int max_order = -1;
  double length_s = -1.0;

  double volume() const { return dims[0] * dims[1] * dims[2]; }
  double surface() const {
    return 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
  }
};

inline void validate(const RoomSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (!(spec.dims[a] > 0.0))
      throw UserError(str_cat("room dimension ", a, " must be positive"));
    if (!(spec.src[a] > 0.0 && spec.src[a] < spec.dims[a]))
      throw UserError("source must lie strictly inside the room");
    if (!(spec.mic[a] > 0.0 && spec.mic[a] < spec.dims[a]))
      throw UserError("microphone must lie strictly inside the room");
  }
  if (!(spec.beta >= 0.0 && spec.beta < 1.0))
    throw UserError(str_cat("reflection coefficient ", spec.beta,
                            " outside [0, 1)"));
  if (!(spec.c > 0.0)) throw UserError("speed of sound must be positive");
}

/// Smallest order at which beta^order drops below 1e-6, capped at 40.
inline int default_max_order(double beta) {
  if (beta <= 0.0) return 0;
  const double order = std::ceil(std::log(1e-6) / std::log(beta));
  return static_cast<int>(std::min(order, 40.0));
}

/// Eyring reverberation time in seconds (0 for beta = 0).
inline double expected_t60_s(const RoomSpec& spec) {
  if (spec.beta <= 0.0) return 0.0;
  const double alpha_log = -std::log(spec.beta * spec.beta);
  return 0.161 * spec.volume() / (spec.surface() * alpha_log);
}

inline double default_length_s(const RoomSpec& spec) {
  return std::max(0.5, 1.5 * expected_t60_s(spec));
}

inline int effective_max_order(const RoomSpec& spec) {
  return spec.max_order >= 0 ? spec.max_order : default_max_order(spec.beta);
}

inline double effective_length_s(const RoomSpec& spec) {
  return spec.length_s > 0.0 ? spec.length_s : default_length_s(spec);
}

struct ImageSource {
  Vec3 position{};
  int reflections = 0;
  double weight = 1.0;  // beta^reflections
};

/// Image sources of the mirrored-room lattice with at most max_order wall
/// reflections. Along one axis an image is (1 - 2q) * s + 2 m L and hits the
/// walls |2m - q| times.
inline std::vector<ImageSource> image_sources(const RoomSpec& spec) {
  const int order = effective_max_order(spec);
  std::vector<ImageSource> out;
  struct AxisImage {
    double pos;
    int count;
  };
  std::array<std::vector<AxisImage>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    for (int m = -order; m <= order; ++m) {
      for (int q = 0; q <= 1; ++q) {
        const int count = std::abs(2 * m - q);
        if (count > order) continue;
        axes[a].push_back(
            {(1 - 2 * q) * spec.src[a] + 2.0 * m * spec.dims[a], count});
      }
    }
  }
  for (const auto& ix : axes[0]) {
    for (const auto& iy : axes[1]) {
      if (ix.count + iy.count > order) continue;
      for (const auto& iz : axes[2]) {
        const int total = ix.count + iy.count + iz.count;
        if (total > order) continue;
        out.push_back({{ix.pos, iy.pos, iz.pos},
                       total,
                       std::pow(spec.beta, total)});
      }
    }
  }
  return out;
}

/// Sampled room impulse response together with the room that generated it.
struct Rir {
  std::vector<double> samples;
  RoomSpec spec;
  std::size_t direct_index = 0;
};

inline std::size_t arrival_index(double dist, double c) {
  return static_cast<std::size_t>(std::llround(dist / c * kSampleRate));
}

/// Image-method RIR with nearest-sample placement of every image.
inline Rir simulate_rir(const RoomSpec& spec) {
  validate(spec);
  const double direct = distance(spec.src, spec.mic);
  if (!(direct > 0.0))
    throw UserError("source and microphone coincide");
  Rir rir;
  rir.spec = spec;
  rir.direct_index = arrival_index(direct, spec.c);
  const auto len = static_cast<std::size_t>(
      std::llround(effective_length_s(spec) * kSampleRate));
  rir.samples.assign(std::max(len, rir.direct_index + 1), 0.0);
  for (const auto& img : image_sources(spec)) {
    if (img.weight == 0.0) continue;
    const double d = distance(img.position, spec.mic);
    const std::size_t idx = arrival_index(d, spec.c);
    if (idx >= rir.samples.size()) continue;
    rir.samples[idx] += img.weight / (4.0 * kPi * d);
  }
  return rir;
}

inline Waveform convolve(const Waveform& w, const Rir& h) {
  return convolve(w, std::span<const double>(h.samples));
}

}  // namespace xane
