// tests/gradcheck.hpp

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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "xane/model.hpp"
#include "xane/nn/encoder.hpp"
#include "xane/nn/layers.hpp"
#include "xane/nn/tensor.hpp"

namespace xane::testing {

inline constexpr double kFdStep = 1e-3;
// Gradients smaller than this are compared absolutely (tolerance 1e-6 at the
// 1e-4 relative bound): the central difference truncation error, about
// step^2 / 6 times the third derivative, is of order 1e-7 for these layers.
inline constexpr double kGradFloor = 1e-2;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;

  void merge(const GradCheck& o) {
    if (o.max_rel > max_rel) {
      max_rel = o.max_rel;
      worst = o.worst;
    }
    checked += o.checked;
  }
};

/// Central differences of `loss` with respect to every entry of `values`,
/// compared with `analytic`. At most `limit` entries are probed (evenly
/// strided) to bound the cost on large tensors.
inline GradCheck check_values(std::vector<double>& values, const std::vector<double>& analytic,
                              const std::function<double()>& loss, const std::string& name,
                              std::size_t limit = static_cast<std::size_t>(-1)) {
  GradCheck r;
  const std::size_t stride = std::max<std::size_t>(1, values.size() / std::min(limit, values.size()));
  for (std::size_t i = 0; i < values.size(); i += stride) {
    const double keep = values[i];
    values[i] = keep + kFdStep;
    const double up = loss();
    values[i] = keep - kFdStep;
    const double down = loss();
    values[i] = keep;
    const double numeric = (up - down) / (2.0 * kFdStep);
    const double e = relative_error(analytic[i], numeric);
    if (e > r.max_rel) {
      r.max_rel = e;
      r.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[i]) +
                " numeric " + std::to_string(numeric);
    }
    ++r.checked;
  }
  return r;
}

inline GradCheck check_parameter(nn::Parameter<double>& p, const std::function<double()>& loss,
                                 std::size_t limit = static_cast<std::size_t>(-1)) {
  return check_values(p.value, p.grad, loss, p.name, limit);
}

inline nn::Matrix<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                        double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  nn::Matrix<double> m(r, c);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

/// sum(w .* y): a scalar probe whose gradient with respect to y is w.
inline double probe(const nn::Matrix<double>& y, const nn::Matrix<double>& w) {
  y.check_same(w);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y.data()[i] * w.data()[i];
  return acc;
}

/// Smallest model used for whole-network gradient checks.
inline ModelConfig gradcheck_config() {
  ModelConfig c;
  c.model_dim = 16;
  c.heads = 2;
  c.ffn_dim = 16;
  c.encoder_layers = 1;
  c.dropout = 0.0;
  return c;
}

inline SegmentTargets random_targets(std::mt19937_64& rng, double vad = 0.8) {
  std::normal_distribution<double> g;
  SegmentTargets y;
  for (std::size_t i = 0; i < kNumRegression; ++i) {
    y.regression[i] = g(rng);
    y.present[i] = i != kPesq;
  }
  y.noise = rng() % kNoiseClasses;
  y.codec = rng() % kCodecClasses;
  y.overlap = rng() % kOverlapClasses;
  y.vad_fraction = vad;
  return y;
}

// Random values for every parameter so biases and norm affines are exercised.
template <typename Layer>
void randomize(Layer& layer, std::mt19937_64& rng, double sd = 0.3) {
  std::normal_distribution<double> g(0.0, sd);
  layer.visit([&](nn::Parameter<double>& p) {
    for (auto& v : p.value) v = g(rng);
  });
}

template <typename Layer>
std::vector<nn::Parameter<double>*> params_of(Layer& layer) {
  std::vector<nn::Parameter<double>*> out;
  layer.visit([&](nn::Parameter<double>& p) { out.push_back(&p); });
  return out;
}

/// Gradient check of a layer with respect to its input and parameters, using
/// the probe loss sum(w .* forward(x)).
template <typename Layer, typename Fwd, typename Bwd>
GradCheck check_layer(Layer& layer, nn::Matrix<double> x, Fwd fwd, Bwd bwd, std::mt19937_64& rng) {
  const nn::Matrix<double> y = fwd(x);
  const nn::Matrix<double> w = random_matrix(y.rows(), y.cols(), rng);
  for (auto* p : params_of(layer)) p->zero_grad();
  const nn::Matrix<double> dx = bwd(x, w);
  const auto loss = [&] { return probe(fwd(x), w); };
  GradCheck r = check_values(x.data(), dx.data(), loss, "input");
  for (auto* p : params_of(layer)) r.merge(check_parameter(*p, loss));
  return r;
}

/// Finite-difference checks of every layer type, one entry per layer.
inline std::vector<std::pair<std::string, GradCheck>> layer_gradchecks(std::uint64_t seed) {
  using namespace nn;
  using M = Matrix<double>;
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::string, GradCheck>> out;
  {
    GradCheck r;
    Linear<double> l("lin", 5, 4);
    randomize(l, rng);
    r = check_layer(l, random_matrix(3, 5, rng), [&](const M& x) { return l.forward(x); },
                    [&](const M& x, const M& dy) { return l.backward(x, dy); }, rng);
    out.emplace_back("linear", r);
  }
  {
    GradCheck r;
    for (auto [k, s, t] : {std::tuple{2, 2, 9}, std::tuple{3, 2, 10}, std::tuple{2, 1, 7}, std::tuple{3, 1, 6}}) {
      Conv1d<double> c("conv", 4, 3, k, s);
      randomize(c, rng);
      r.merge(check_layer(c, random_matrix(t, 4, rng), [&](const M& x) { return c.forward(x); },
                          [&](const M& x, const M& dy) { return c.backward(x, dy); }, rng));
    }
    out.emplace_back("conv1d", r);
  }
  {
    GradCheck r;
    DepthwiseConv1d<double> c("dw", 4, 5);
    randomize(c, rng);
    r = check_layer(c, random_matrix(8, 4, rng), [&](const M& x) { return c.forward(x); },
                    [&](const M& x, const M& dy) { return c.backward(x, dy); }, rng);
    out.emplace_back("depthwise conv1d", r);
  }
  {
    GradCheck r;
    LayerNorm<double> ln("ln", 6);
    randomize(ln, rng, 1.0);
    LayerNorm<double>::Cache c;
    r = check_layer(ln, random_matrix(4, 6, rng), [&](const M& x) { return ln.forward(x, c); },
                    [&](const M&, const M& dy) { return ln.backward(dy, c); }, rng);
    out.emplace_back("layer norm", r);
  }
  {
    GradCheck r;
    Linear<double> none("none", 1, 1);  // no parameters are touched
    for (auto act : {Activation::kGelu, Activation::kSwish}) {
      r.merge(check_layer(none, random_matrix(3, 5, rng, 2.0), [&](const M& x) { return activate(x, act); },
                          [&](const M& x, const M& dy) { return activate_backward(x, dy, act); }, rng));
    }
    r.merge(check_layer(none, random_matrix(3, 6, rng, 2.0), [&](const M& x) { return glu(x); },
                        [&](const M& x, const M& dy) { return glu_backward(x, dy); }, rng));
    r.merge(check_layer(none, random_matrix(5, 3, rng), [&](const M& x) { return mean_pool(x); },
                        [&](const M& x, const M& dy) { return mean_pool_backward(dy, x.rows()); }, rng));
    out.emplace_back("activations", r);
  }
  {
    GradCheck r;
    Linear<double> none("none", 1, 1);
    DropoutMask<double> mask;
    Rng drng(9);
    const M x0 = random_matrix(4, 5, rng);
    dropout(x0, 0.3, &drng, mask);
    const auto apply = [&](const M& x) {
      M y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.scale[i];
      return y;
    };
    r = check_layer(none, x0, apply, [&](const M&, const M& dy) { return dropout_backward(dy, mask); }, rng);
    out.emplace_back("dropout with a fixed mask", r);
  }
  {
    GradCheck r;
    MultiHeadAttention<double> mha("mha", 8, 2);
    randomize(mha, rng);
    MultiHeadAttention<double>::Cache c;
    r = check_layer(mha, random_matrix(5, 8, rng), [&](const M& x) { return mha.forward(x, c); },
                    [&](const M&, const M& dy) { return mha.backward(dy, c); }, rng);
    out.emplace_back("multi-head attention", r);
  }
  {
    GradCheck r;
    FeedForward<double> ff("ff", 6, 10, Activation::kGelu);
    randomize(ff, rng, 0.5);
    FeedForward<double>::Cache c;
    r = check_layer(ff, random_matrix(4, 6, rng), [&](const M& x) { return ff.forward(x, c); },
                    [&](const M&, const M& dy) { return ff.backward(dy, c); }, rng);
    out.emplace_back("feed-forward", r);
  }
  {
    GradCheck r;
    AttentionPool<double> pool("pool", 6);
    randomize(pool, rng, 0.7);
    AttentionPool<double>::Cache c;
    r = check_layer(pool, random_matrix(5, 6, rng), [&](const M& x) { return pool.forward(x, c); },
                    [&](const M&, const M& dy) { return pool.backward(dy, c); }, rng);
    out.emplace_back("attention pooling", r);
  }
  {
    GradCheck r;
    TransformerLayer<double> layer("enc", 8, 2, 12, 0.0);
    randomize(layer, rng);
    TransformerLayer<double>::Cache c;
    r = check_layer(layer, random_matrix(5, 8, rng), [&](const M& x) { return layer.forward(x, c, nullptr); },
                    [&](const M&, const M& dy) { return layer.backward(dy, c); }, rng);
    out.emplace_back("transformer layer", r);
  }
  {
    GradCheck r;
    ConformerLayer<double> layer("conf", 8, 2, 12, 5, 0.0);
    randomize(layer, rng);
    ConformerLayer<double>::Cache c;
    r = check_layer(layer, random_matrix(6, 8, rng), [&](const M& x) { return layer.forward(x, c, nullptr); },
                    [&](const M&, const M& dy) { return layer.backward(dy, c); }, rng);
    out.emplace_back("conformer layer", r);
  }
  return out;
}

template <typename T>
nn::Matrix<T> random_input(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  nn::Matrix<T> x(cfg.input_frames(), cfg.input_dim());
  for (auto& v : x.data()) v = static_cast<T>(g(rng));
  return x;
}

inline double batch_loss(XaneModel<double>& model, const std::vector<nn::Matrix<double>>& xs,
                  const std::vector<SegmentTargets>& ys, const LossSchedule& w) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto out = model.forward(xs[i]);
    total += segment_loss(out.heads.data(), ys[i], w).total;
  }
  return total / static_cast<double>(xs.size());
}

inline GradCheck check_model(const ModelConfig& cfg, std::uint64_t seed, std::size_t limit) {
  std::mt19937_64 rng(seed);
  XaneModel<double> model(cfg);
  model.init(seed);
  // Non-zero biases and norm affines so every parameter carries gradient.
  std::normal_distribution<double> g(0.0, 0.1);
  model.visit([&](nn::Parameter<double>& p) {
    if (p.shape.size() == 1)
      for (auto& v : p.value) v += g(rng);
  });
  std::vector<nn::Matrix<double>> xs{random_input<double>(cfg, rng), random_input<double>(cfg, rng)};
  std::vector<SegmentTargets> ys{random_targets(rng, 0.9), random_targets(rng, 0.4)};
  std::vector<const nn::Matrix<double>*> ptrs{&xs[0], &xs[1]};
  const LossSchedule w = loss_weights(5);
  accumulate_gradients<double>(model, ptrs, ys, w);
  GradCheck r;
  const auto loss = [&] { return batch_loss(model, xs, ys, w); };
  model.visit([&](nn::Parameter<double>& p) { r.merge(check_parameter(p, loss, limit)); });
  return r;
}

}  // namespace xane::testing
