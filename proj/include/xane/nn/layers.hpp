// include/xane/nn/layers.hpp

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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xane/nn/tensor.hpp"

namespace xane::nn {

// ---------------------------------------------------------------------------
// Linear: y = x W + b, W is in x out.

template <typename T>
class Linear {
 public:
  Parameter<T> weight;
  Parameter<T> bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : weight(name + ".weight", {in, out}), bias(name + ".bias", {out}) {}

  std::size_t in_dim() const { return weight.shape[0]; }
  std::size_t out_dim() const { return weight.shape[1]; }

  void init(Rng& rng) { xavier_uniform(weight, in_dim(), out_dim(), rng); }

  Matrix<T> forward(const Matrix<T>& x) const {
    const std::size_t in = in_dim(), out = out_dim();
    if (x.cols() != in)
      throw Error(str_cat(weight.name, ": input dim ", x.cols(), " != ", in));
    Matrix<T> y(x.rows(), out);
    std::vector<double> acc(out);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      for (std::size_t j = 0; j < out; ++j) acc[j] = bias.value[j];
      const T* xr = x.row(t);
      for (std::size_t k = 0; k < in; ++k) {
        const double xv = xr[k];
        if (xv == 0.0) continue;
        const T* w = weight.value.data() + k * out;
        for (std::size_t j = 0; j < out; ++j) acc[j] += xv * w[j];
      }
      T* yr = y.row(t);
      for (std::size_t j = 0; j < out; ++j) yr[j] = static_cast<T>(acc[j]);
    }
    return y;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
    const std::size_t in = in_dim(), out = out_dim();
    Matrix<T> dx(x.rows(), in);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      const T* g = dy.row(t);
      const T* xr = x.row(t);
      for (std::size_t k = 0; k < in; ++k) {
        const T* w = weight.value.data() + k * out;
        double s = 0.0;
        for (std::size_t j = 0; j < out; ++j) s += static_cast<double>(g[j]) * w[j];
        dx(t, k) = static_cast<T>(s);
        const double xv = xr[k];
        if (xv == 0.0) continue;
        double* wg = weight.grad.data() + k * out;
        for (std::size_t j = 0; j < out; ++j) wg[j] += xv * g[j];
      }
      for (std::size_t j = 0; j < out; ++j) bias.grad[j] += g[j];
    }
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
};

// ---------------------------------------------------------------------------
// Conv1d over time with "same" padding followed by stride subsampling, so the
// output has ceil(T / stride) frames. Weight layout: kernel x in x out.

template <typename T>
class Conv1d {
 public:
  Parameter<T> weight;
  Parameter<T> bias;

  Conv1d() = default;
  Conv1d(const std::string& name, std::size_t in, std::size_t out,
         std::size_t kernel, std::size_t stride)
      : weight(name + ".weight", {kernel, in, out}),
        bias(name + ".bias", {out}),
        kernel_(kernel),
        stride_(stride) {
    if (kernel == 0 || stride == 0) throw Error("conv1d: zero kernel or stride");
  }

  std::size_t in_dim() const { return weight.shape[1]; }
  std::size_t out_dim() const { return weight.shape[2]; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  std::size_t out_frames(std::size_t frames) const {
    return (frames + stride_ - 1) / stride_;
  }

  void init(Rng& rng) {
    xavier_uniform(weight, kernel_ * in_dim(), kernel_ * out_dim(), rng);
  }

  Matrix<T> forward(const Matrix<T>& x) const {
    const std::size_t in = in_dim(), out = out_dim();
    if (x.cols() != in)
      throw Error(str_cat(weight.name, ": input channels ", x.cols(), " != ", in));
    if (x.rows() == 0) throw Error(str_cat(weight.name, ": empty input"));
    const std::size_t frames = out_frames(x.rows());
    Matrix<T> y(frames, out);
    std::vector<double> acc(out);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t o = 0; o < out; ++o) acc[o] = bias.value[o];
      for (std::size_t j = 0; j < kernel_; ++j) {
        const auto src = source(t, j, x.rows());
        if (!src) continue;
        const T* xr = x.row(*src);
        const T* w = weight.value.data() + j * in * out;
        for (std::size_t c = 0; c < in; ++c) {
          const double xv = xr[c];
          if (xv == 0.0) continue;
          const T* wc = w + c * out;
          for (std::size_t o = 0; o < out; ++o) acc[o] += xv * wc[o];
        }
      }
      for (std::size_t o = 0; o < out; ++o) y(t, o) = static_cast<T>(acc[o]);
    }
    return y;
  }

  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
    const std::size_t in = in_dim(), out = out_dim();
    Matrix<T> dx(x.rows(), in);
    std::vector<double> dxa(x.rows() * in, 0.0);
    for (std::size_t t = 0; t < dy.rows(); ++t) {
      const T* g = dy.row(t);
      for (std::size_t o = 0; o < out; ++o) bias.grad[o] += g[o];
      for (std::size_t j = 0; j < kernel_; ++j) {
        const auto src = source(t, j, x.rows());
        if (!src) continue;
        const T* xr = x.row(*src);
        const T* w = weight.value.data() + j * in * out;
        double* wg = weight.grad.data() + j * in * out;
        for (std::size_t c = 0; c < in; ++c) {
          const T* wc = w + c * out;
          double s = 0.0;
          for (std::size_t o = 0; o < out; ++o) s += static_cast<double>(g[o]) * wc[o];
          dxa[*src * in + c] += s;
          const double xv = xr[c];
          if (xv == 0.0) continue;
          double* gc = wg + c * out;
          for (std::size_t o = 0; o < out; ++o) gc[o] += xv * g[o];
        }
      }
    }
    for (std::size_t i = 0; i < dxa.size(); ++i) dx.data()[i] = static_cast<T>(dxa[i]);
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }

 private:
  std::optional<std::size_t> source(std::size_t t, std::size_t j,
                                    std::size_t frames) const {
    const long long pos = static_cast<long long>(t * stride_ + j) -
                          static_cast<long long>((kernel_ - 1) / 2);
    if (pos < 0 || pos >= static_cast<long long>(frames)) return std::nullopt;
    return static_cast<std::size_t>(pos);
  }

  std::size_t kernel_ = 1;
  std::size_t stride_ = 1;
};

// ---------------------------------------------------------------------------
// Depthwise (per-channel) Conv1d, stride 1, "same" padding. Weight: kernel x C.

template <typename T>
class DepthwiseConv1d {
 public:
  Parameter<T> weight;
  Parameter<T> bias;

  DepthwiseConv1d() = default;
  DepthwiseConv1d(const std::string& name, std::size_t channels, std::size_t kernel)
      : weight(name + ".weight", {kernel, channels}), bias(name + ".bias", {channels}) {}

  std::size_t kernel() const { return weight.shape[0]; }
  std::size_t channels() const { return weight.shape[1]; }

  void init(Rng& rng) { xavier_uniform(weight, kernel(), kernel(), rng); }

  Matrix<T> forward(const Matrix<T>& x) const {
    const std::size_t C = channels(), K = kernel();
    if (x.cols() != C) throw Error(str_cat(weight.name, ": channel mismatch"));
    Matrix<T> y(x.rows(), C);
    const long long pad = static_cast<long long>((K - 1) / 2);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        double acc = bias.value[c];
        for (std::size_t j = 0; j < K; ++j) {
          const long long s = static_cast<long long>(t + j) - pad;
          if (s < 0 || s >= static_cast<long long>(x.rows())) continue;
          acc += static_cast<double>(x(static_cast<std::size_t>(s), c)) *
                 weight.value[j * C + c];
        }
        y(t, c) = static_cast<T>(acc);
      }
    }
    return y;
  }

  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
    const std::size_t C = channels(), K = kernel();
    std::vector<double> dxa(x.size(), 0.0);
    const long long pad = static_cast<long long>((K - 1) / 2);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        const double g = dy(t, c);
        bias.grad[c] += g;
        for (std::size_t j = 0; j < K; ++j) {
          const long long s = static_cast<long long>(t + j) - pad;
          if (s < 0 || s >= static_cast<long long>(x.rows())) continue;
          const auto si = static_cast<std::size_t>(s);
          weight.grad[j * C + c] += g * x(si, c);
          dxa[si * C + c] += g * weight.value[j * C + c];
        }
      }
    }
    Matrix<T> dx(x.rows(), C);
    for (std::size_t i = 0; i < dxa.size(); ++i) dx.data()[i] = static_cast<T>(dxa[i]);
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
};

// ---------------------------------------------------------------------------
// LayerNorm over the feature dimension of every frame.

template <typename T>
class LayerNorm {
 public:
  Parameter<T> gain;
  Parameter<T> bias;
  double eps = 1e-5;

  struct Cache {
    Matrix<T> xhat;
    std::vector<double> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim)
      : gain(name + ".gain", {dim}, T(1)), bias(name + ".bias", {dim}) {
    if (dim < 2) throw Error("layer_norm: feature dim must be >= 2");
  }

  std::size_t dim() const { return gain.size(); }

  void init(Rng&) {
    std::fill(gain.value.begin(), gain.value.end(), T(1));
    std::fill(bias.value.begin(), bias.value.end(), T(0));
  }

  Matrix<T> forward(const Matrix<T>& x, Cache& cache) const {
    const std::size_t D = dim();
    if (x.cols() != D) throw Error(str_cat(gain.name, ": dim mismatch"));
    Matrix<T> y(x.rows(), D);
    cache.xhat = Matrix<T>(x.rows(), D);
    cache.inv_std.assign(x.rows(), 0.0);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      const T* xr = x.row(t);
      double mean = 0.0;
      for (std::size_t d = 0; d < D; ++d) mean += xr[d];
      mean /= static_cast<double>(D);
      double var = 0.0;
      for (std::size_t d = 0; d < D; ++d) var += (xr[d] - mean) * (xr[d] - mean);
      var /= static_cast<double>(D);
      const double inv = 1.0 / std::sqrt(var + eps);
      cache.inv_std[t] = inv;
      for (std::size_t d = 0; d < D; ++d) {
        const double h = (xr[d] - mean) * inv;
        cache.xhat(t, d) = static_cast<T>(h);
        y(t, d) = static_cast<T>(h * gain.value[d] + bias.value[d]);
      }
    }
    return y;
  }

  Matrix<T> forward(const Matrix<T>& x) const {
    Cache c;
    return forward(x, c);
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& cache) {
    const std::size_t D = dim();
    Matrix<T> dx(dy.rows(), D);
    std::vector<double> dh(D);
    for (std::size_t t = 0; t < dy.rows(); ++t) {
      double sum = 0.0, dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double g = dy(t, d);
        const double h = cache.xhat(t, d);
        gain.grad[d] += g * h;
        bias.grad[d] += g;
        dh[d] = g * gain.value[d];
        sum += dh[d];
        dot += dh[d] * h;
      }
      const double k = cache.inv_std[t] / static_cast<double>(D);
      for (std::size_t d = 0; d < D; ++d)
        dx(t, d) = static_cast<T>(
            k * (static_cast<double>(D) * dh[d] - sum - cache.xhat(t, d) * dot));
    }
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    f(gain);
    f(bias);
  }
};

// ---------------------------------------------------------------------------
// Pointwise activations. Backward functions take the forward input.

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
  return cdf + x * pdf;
}
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double swish(double x) { return x * sigmoid(x); }
inline double swish_grad(double x) {
  const double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

enum class Activation { kGelu, kSwish };

template <typename T>
Matrix<T> activate(const Matrix<T>& x, Activation a) {
  Matrix<T> y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    y.data()[i] = static_cast<T>(a == Activation::kGelu ? gelu(v) : swish(v));
  }
  return y;
}

template <typename T>
Matrix<T> activate_backward(const Matrix<T>& x, const Matrix<T>& dy, Activation a) {
  Matrix<T> dx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    dx.data()[i] = static_cast<T>(
        dy.data()[i] * (a == Activation::kGelu ? gelu_grad(v) : swish_grad(v)));
  }
  return dx;
}

/// Gated linear unit over a T x 2C input: first half * sigmoid(second half).
template <typename T>
Matrix<T> glu(const Matrix<T>& x) {
  const std::size_t C = x.cols() / 2;
  Matrix<T> y(x.rows(), C);
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t c = 0; c < C; ++c)
      y(t, c) = static_cast<T>(x(t, c) * sigmoid(x(t, C + c)));
  return y;
}

template <typename T>
Matrix<T> glu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  const std::size_t C = x.cols() / 2;
  Matrix<T> dx(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const double s = sigmoid(x(t, C + c));
      const double g = dy(t, c);
      dx(t, c) = static_cast<T>(g * s);
      dx(t, C + c) = static_cast<T>(g * x(t, c) * s * (1.0 - s));
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Inverted dropout. An empty mask means identity.

template <typename T>
struct DropoutMask {
  std::vector<T> scale;
};

template <typename T>
Matrix<T> dropout(const Matrix<T>& x, double p, Rng* rng, DropoutMask<T>& mask) {
  mask.scale.clear();
  if (rng == nullptr || p <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  mask.scale.resize(x.size());
  Matrix<T> y(x.rows(), x.cols());
  const T s = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask.scale[i] = keep(*rng) ? s : T(0);
    y.data()[i] = x.data()[i] * mask.scale[i];
  }
  return y;
}

template <typename T>
Matrix<T> dropout_backward(const Matrix<T>& dy, const DropoutMask<T>& mask) {
  if (mask.scale.empty()) return dy;
  Matrix<T> dx(dy.rows(), dy.cols());
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data()[i] = dy.data()[i] * mask.scale[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Multi-head scaled dot-product self-attention.

template <typename T>
class MultiHeadAttention {
 public:
  Linear<T> query, key, value, output;

  struct Cache {
    Matrix<T> x, q, k, v, context;
    std::vector<Matrix<T>> probs;  // per head, T x T, rows sum to 1
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, std::size_t dim, std::size_t heads)
      : query(name + ".query", dim, dim),
        key(name + ".key", dim, dim),
        value(name + ".value", dim, dim),
        output(name + ".output", dim, dim),
        heads_(heads) {
    if (heads == 0 || dim % heads != 0)
      throw Error(str_cat("attention: dim ", dim, " not divisible by ", heads, " heads"));
  }

  std::size_t heads() const { return heads_; }
  std::size_t dim() const { return query.in_dim(); }

  void init(Rng& rng) {
    query.init(rng);
    key.init(rng);
    value.init(rng);
    output.init(rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache& c) const {
    const std::size_t D = dim(), H = heads_, dh = D / H, n = x.rows();
    c.x = x;
    c.q = query.forward(x);
    c.k = key.forward(x);
    c.v = value.forward(x);
    c.context = Matrix<T>(n, D);
    c.probs.assign(H, Matrix<T>(n, n));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> s(n);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      auto& a = c.probs[h];
      for (std::size_t i = 0; i < n; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < n; ++j) {
          double dot = 0.0;
          for (std::size_t d = 0; d < dh; ++d)
            dot += static_cast<double>(c.q(i, off + d)) * c.k(j, off + d);
          s[j] = dot * scale;
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          s[j] = std::exp(s[j] - mx);
          z += s[j];
        }
        for (std::size_t j = 0; j < n; ++j) a(i, j) = static_cast<T>(s[j] / z);
        for (std::size_t d = 0; d < dh; ++d) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += static_cast<double>(a(i, j)) * c.v(j, off + d);
          c.context(i, off + d) = static_cast<T>(acc);
        }
      }
    }
    return output.forward(c.context);
  }

  Matrix<T> forward(const Matrix<T>& x) const {
    Cache c;
    return forward(x, c);
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& c) {
    const std::size_t D = dim(), H = heads_, dh = D / H, n = c.x.rows();
    const Matrix<T> dctx = output.backward(c.context, dy);
    Matrix<T> dq(n, D), dk(n, D), dv(n, D);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> da(n), ds(n);
    std::vector<double> dka(n * dh), dva(n * dh);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      const auto& a = c.probs[h];
      std::fill(dka.begin(), dka.end(), 0.0);
      std::fill(dva.begin(), dva.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double row_dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t d = 0; d < dh; ++d)
            acc += static_cast<double>(dctx(i, off + d)) * c.v(j, off + d);
          da[j] = acc;
          row_dot += acc * a(i, j);
          for (std::size_t d = 0; d < dh; ++d)
            dva[j * dh + d] += static_cast<double>(a(i, j)) * dctx(i, off + d);
        }
        for (std::size_t j = 0; j < n; ++j) ds[j] = a(i, j) * (da[j] - row_dot) * scale;
        for (std::size_t d = 0; d < dh; ++d) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += ds[j] * c.k(j, off + d);
          dq(i, off + d) = static_cast<T>(acc);
        }
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t d = 0; d < dh; ++d)
            dka[j * dh + d] += ds[j] * c.q(i, off + d);
      }
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t d = 0; d < dh; ++d) {
          dk(j, off + d) = static_cast<T>(dka[j * dh + d]);
          dv(j, off + d) = static_cast<T>(dva[j * dh + d]);
        }
    }
    Matrix<T> dx = query.backward(c.x, dq);
    dx += key.backward(c.x, dk);
    dx += value.backward(c.x, dv);
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    query.visit(f);
    key.visit(f);
    value.visit(f);
    output.visit(f);
  }

 private:
  std::size_t heads_ = 1;
};

// ---------------------------------------------------------------------------
// Position-wise feed-forward: Linear -> activation -> Linear.

template <typename T>
class FeedForward {
 public:
  Linear<T> inner, outer;
  Activation act = Activation::kGelu;

  struct Cache {
    Matrix<T> x, pre, post;
  };

  FeedForward() = default;
  FeedForward(const std::string& name, std::size_t dim, std::size_t hidden, Activation a)
      : inner(name + ".inner", dim, hidden), outer(name + ".outer", hidden, dim), act(a) {}

  void init(Rng& rng) {
    inner.init(rng);
    outer.init(rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache& c) const {
    c.x = x;
    c.pre = inner.forward(x);
    c.post = activate(c.pre, act);
    return outer.forward(c.post);
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& c) {
    const Matrix<T> dpost = outer.backward(c.post, dy);
    return inner.backward(c.x, activate_backward(c.pre, dpost, act));
  }

  template <typename F>
  void visit(F&& f) {
    inner.visit(f);
    outer.visit(f);
  }
};

// ---------------------------------------------------------------------------
// Sinusoidal position encoding (added, no parameters).

template <typename T>
Matrix<T> add_positional_encoding(Matrix<T> x) {
  const std::size_t D = x.cols();
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t i = 0; i < D; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(D));
      const double angle = static_cast<double>(t) * rate;
      x(t, i) = static_cast<T>(x(t, i) + (i % 2 == 0 ? std::sin(angle) : std::cos(angle)));
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Temporal pooling to a single 1 x D row.

template <typename T>
Matrix<T> mean_pool(const Matrix<T>& x) {
  Matrix<T> y(1, x.cols());
  for (std::size_t d = 0; d < x.cols(); ++d) {
    double acc = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) acc += x(t, d);
    y(0, d) = static_cast<T>(acc / static_cast<double>(x.rows()));
  }
  return y;
}

template <typename T>
Matrix<T> mean_pool_backward(const Matrix<T>& dy, std::size_t frames) {
  Matrix<T> dx(frames, dy.cols());
  const double inv = 1.0 / static_cast<double>(frames);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t d = 0; d < dy.cols(); ++d) dx(t, d) = static_cast<T>(dy(0, d) * inv);
  return dx;
}

/// Softmax-weighted sum over frames with a learned scoring vector.
template <typename T>
class AttentionPool {
 public:
  Parameter<T> score;

  struct Cache {
    Matrix<T> x;
    std::vector<double> weights;
  };

  AttentionPool() = default;
  AttentionPool(const std::string& name, std::size_t dim) : score(name + ".score", {dim}) {}

  void init(Rng& rng) { xavier_uniform(score, score.size(), 1, rng); }

  Matrix<T> forward(const Matrix<T>& x, Cache& c) const {
    c.x = x;
    c.weights.assign(x.rows(), 0.0);
    double mx = -1e300;
    for (std::size_t t = 0; t < x.rows(); ++t) {
      double s = 0.0;
      for (std::size_t d = 0; d < x.cols(); ++d) s += static_cast<double>(x(t, d)) * score.value[d];
      c.weights[t] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (auto& w : c.weights) z += (w = std::exp(w - mx));
    for (auto& w : c.weights) w /= z;
    Matrix<T> y(1, x.cols());
    for (std::size_t d = 0; d < x.cols(); ++d) {
      double acc = 0.0;
      for (std::size_t t = 0; t < x.rows(); ++t) acc += c.weights[t] * x(t, d);
      y(0, d) = static_cast<T>(acc);
    }
    return y;
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& c) {
    const std::size_t n = c.x.rows(), D = c.x.cols();
    std::vector<double> da(n);
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(dy(0, d)) * c.x(t, d);
      da[t] = acc;
      mean += c.weights[t] * acc;
    }
    Matrix<T> dx(n, D);
    for (std::size_t t = 0; t < n; ++t) {
      const double ds = c.weights[t] * (da[t] - mean);
      for (std::size_t d = 0; d < D; ++d) {
        dx(t, d) = static_cast<T>(c.weights[t] * dy(0, d) + ds * score.value[d]);
        score.grad[d] += ds * c.x(t, d);
      }
    }
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    f(score);
  }
};

}  // namespace xane::nn
