// tests/rir_oracle.hpp

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

// Brute-force image enumeration used to check the image-source method.
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "xane/rir.hpp"

namespace xane::testing {

// Independent enumeration of mirrored rooms: cell i along an axis holds the
// source mirrored |i| times, at i*L + s for even i and (i+1)*L - s for odd i.
inline std::multimap<std::tuple<long, long, long>, int> lattice_oracle(const RoomSpec& r, int order) {
  std::multimap<std::tuple<long, long, long>, int> out;
  const int reach = order + 1;
  const auto axis = [](int i, double L, double s) {
    return (i % 2 == 0) ? i * L + s : (i + 1) * L - s;
  };
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = -reach; k <= reach; ++k) {
        const int n = std::abs(i) + std::abs(j) + std::abs(k);
        if (n > order) continue;
        const auto key = std::make_tuple(std::lround(axis(i, r.dims[0], r.src[0]) * 1e6),
                                         std::lround(axis(j, r.dims[1], r.src[1]) * 1e6),
                                         std::lround(axis(k, r.dims[2], r.src[2]) * 1e6));
        out.emplace(key, n);
      }
  return out;
}

inline RoomSpec random_room(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RoomSpec r;
  r.dims = {3.0 + 7.0 * u(rng), 3.0 + 5.0 * u(rng), 2.4 + 1.6 * u(rng)};
  for (int a = 0; a < 3; ++a) {
    r.src[a] = r.dims[a] * (0.1 + 0.8 * u(rng));
    r.mic[a] = r.dims[a] * (0.1 + 0.8 * u(rng));
  }
  r.beta = 0.2 + 0.7 * u(rng);
  return r;
}


}  // namespace xane::testing
