// include/xane/nn/loss.hpp

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
#include <span>
#include <vector>

#include "xane/common.hpp"

namespace xane::nn {

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = -1e300;
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= z;
  return p;
}

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // dLoss / dInput
};

/// Max-subtracted softmax cross entropy for one example.
inline LossValue softmax_ce(std::span<const double> logits, std::size_t target) {
  if (logits.size() < 2) throw Error("softmax_ce: need at least 2 classes");
  if (target >= logits.size())
    throw Error(str_cat("softmax_ce: target ", target, " out of range"));
  double mx = -1e300;
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  LossValue out;
  out.loss = std::log(z) + mx - logits[target];
  out.grad = softmax(logits);
  out.grad[target] -= 1.0;
  return out;
}

struct MaskedMse {
  double loss = 0.0;
  std::size_t count = 0;  // 0 means nothing contributed
  std::vector<double> grad;
  std::vector<double> per_element;  // mask * (pred - target)^2 / max(count, 1)
};

/// sum(mask * (pred - target)^2) / max(sum(mask), 1).
inline MaskedMse masked_mse(std::span<const double> pred, std::span<const double> target,
                            const std::vector<bool>& mask) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw Error("masked_mse: size mismatch");
  MaskedMse out;
  for (bool m : mask) out.count += m ? 1 : 0;
  const double denom = static_cast<double>(std::max<std::size_t>(out.count, 1));
  out.grad.assign(pred.size(), 0.0);
  out.per_element.assign(pred.size(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double e = pred[i] - target[i];
    out.per_element[i] = e * e / denom;
    out.loss += out.per_element[i];
    out.grad[i] = 2.0 * e / denom;
  }
  return out;
}

}  // namespace xane::nn
