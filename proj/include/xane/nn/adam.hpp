// include/xane/nn/adam.hpp

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
#include <vector>

#include "xane/nn/tensor.hpp"

namespace xane::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates for one parameter tensor.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

/// One bias-corrected Adam update of `p` from its accumulated gradient.
template <typename T>
void adam_step(Parameter<T>& p, AdamState& s, double lr, const AdamConfig& cfg = {}) {
  if (s.m.size() != p.size()) {
    s.m.assign(p.size(), 0.0);
    s.v.assign(p.size(), 0.0);
    s.step = 0;
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = p.grad[i];
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g;
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    p.value[i] = static_cast<T>(p.value[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

/// Halves (by `factor`) the learning rate after `patience` epochs without a
/// new best validation loss.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, int patience, double factor)
      : lr_(lr), patience_(patience), factor_(factor) {}

  double lr() const { return lr_; }

  /// Returns true when the learning rate was reduced.
  bool observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      bad_ = 0;
      return false;
    }
    if (++bad_ > patience_) {
      lr_ *= factor_;
      bad_ = 0;
      return true;
    }
    return false;
  }

 private:
  double lr_;
  int patience_;
  double factor_;
  double best_ = 1e300;
  int bad_ = 0;
};

}  // namespace xane::nn
