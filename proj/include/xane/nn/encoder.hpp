// include/xane/nn/encoder.hpp

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

#include <string>

#include "xane/nn/layers.hpp"

namespace xane::nn {

/// Pre-norm Transformer encoder layer:
///   x1 = x + Drop(MHA(LN(x)));  y = x1 + Drop(FFN(LN(x1))).
template <typename T>
class TransformerLayer {
 public:
  LayerNorm<T> attn_norm;
  MultiHeadAttention<T> attn;
  LayerNorm<T> ffn_norm;
  FeedForward<T> ffn;
  double dropout = 0.0;

  struct Cache {
    typename LayerNorm<T>::Cache n1, n2;
    typename MultiHeadAttention<T>::Cache a;
    typename FeedForward<T>::Cache f;
    DropoutMask<T> d1, d2;
  };

  TransformerLayer() = default;
  TransformerLayer(const std::string& name, std::size_t dim, std::size_t heads,
                   std::size_t ffn_dim, double drop)
      : attn_norm(name + ".attn_norm", dim),
        attn(name + ".attn", dim, heads),
        ffn_norm(name + ".ffn_norm", dim),
        ffn(name + ".ffn", dim, ffn_dim, Activation::kGelu),
        dropout(drop) {}

  void init(Rng& rng) {
    attn_norm.init(rng);
    attn.init(rng);
    ffn_norm.init(rng);
    ffn.init(rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache& c, Rng* rng) const {
    Matrix<T> a = dropout_(attn.forward(attn_norm.forward(x, c.n1), c.a), rng, c.d1);
    Matrix<T> x1 = x + a;
    Matrix<T> f = dropout_(ffn.forward(ffn_norm.forward(x1, c.n2), c.f), rng, c.d2);
    return x1 + f;
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& c) {
    Matrix<T> dx1 = dy;
    dx1 += ffn_norm.backward(ffn.backward(dropout_backward(dy, c.d2), c.f), c.n2);
    Matrix<T> dx = dx1;
    dx += attn_norm.backward(attn.backward(dropout_backward(dx1, c.d1), c.a), c.n1);
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    attn_norm.visit(f);
    attn.visit(f);
    ffn_norm.visit(f);
    ffn.visit(f);
  }

 private:
  Matrix<T> dropout_(const Matrix<T>& x, Rng* rng, DropoutMask<T>& m) const {
    return nn::dropout(x, dropout, rng, m);
  }
};

/// Conformer layer: half-step FFN, self-attention, convolution module and a
/// second half-step FFN, each residual, followed by a final LayerNorm. The
/// convolution module is LN -> pointwise(2d) -> GLU -> depthwise conv -> LN ->
/// Swish -> pointwise(d).
template <typename T>
class ConformerLayer {
 public:
  LayerNorm<T> ff1_norm;
  FeedForward<T> ff1;
  LayerNorm<T> attn_norm;
  MultiHeadAttention<T> attn;
  LayerNorm<T> conv_norm;
  Linear<T> pointwise_in;
  DepthwiseConv1d<T> depthwise;
  LayerNorm<T> depthwise_norm;
  Linear<T> pointwise_out;
  LayerNorm<T> ff2_norm;
  FeedForward<T> ff2;
  LayerNorm<T> out_norm;
  double dropout = 0.0;

  struct Cache {
    typename LayerNorm<T>::Cache nf1, na, nc, nd, nf2, no;
    typename FeedForward<T>::Cache f1, f2;
    typename MultiHeadAttention<T>::Cache a;
    Matrix<T> conv_in, pw_in_out, glu_out, dw_out, dwn_out, swish_out;
    DropoutMask<T> d1, d2, d3, d4;
  };

  ConformerLayer() = default;
  ConformerLayer(const std::string& name, std::size_t dim, std::size_t heads,
                 std::size_t ffn_dim, std::size_t kernel, double drop)
      : ff1_norm(name + ".ff1_norm", dim),
        ff1(name + ".ff1", dim, ffn_dim, Activation::kSwish),
        attn_norm(name + ".attn_norm", dim),
        attn(name + ".attn", dim, heads),
        conv_norm(name + ".conv_norm", dim),
        pointwise_in(name + ".conv.pointwise_in", dim, 2 * dim),
        depthwise(name + ".conv.depthwise", dim, kernel),
        depthwise_norm(name + ".conv.depthwise_norm", dim),
        pointwise_out(name + ".conv.pointwise_out", dim, dim),
        ff2_norm(name + ".ff2_norm", dim),
        ff2(name + ".ff2", dim, ffn_dim, Activation::kSwish),
        out_norm(name + ".out_norm", dim),
        dropout(drop) {}

  void init(Rng& rng) {
    visit_modules([&](auto& m) { m.init(rng); });
  }

  Matrix<T> forward(const Matrix<T>& x, Cache& c, Rng* rng) const {
    const Matrix<T> a = nn::dropout(ff1.forward(ff1_norm.forward(x, c.nf1), c.f1), dropout, rng, c.d1);
    const Matrix<T> x1 = x + scaled(a, 0.5);
    const Matrix<T> b = nn::dropout(attn.forward(attn_norm.forward(x1, c.na), c.a), dropout, rng, c.d2);
    const Matrix<T> x2 = x1 + b;
    c.conv_in = conv_norm.forward(x2, c.nc);
    c.pw_in_out = pointwise_in.forward(c.conv_in);
    c.glu_out = glu(c.pw_in_out);
    c.dw_out = depthwise.forward(c.glu_out);
    c.dwn_out = depthwise_norm.forward(c.dw_out, c.nd);
    c.swish_out = activate(c.dwn_out, Activation::kSwish);
    const Matrix<T> o = nn::dropout(pointwise_out.forward(c.swish_out), dropout, rng, c.d3);
    const Matrix<T> x3 = x2 + o;
    const Matrix<T> e = nn::dropout(ff2.forward(ff2_norm.forward(x3, c.nf2), c.f2), dropout, rng, c.d4);
    const Matrix<T> x4 = x3 + scaled(e, 0.5);
    return out_norm.forward(x4, c.no);
  }

  Matrix<T> backward(const Matrix<T>& dy, const Cache& c) {
    const Matrix<T> dx4 = out_norm.backward(dy, c.no);
    Matrix<T> dx3 = dx4;
    dx3 += ff2_norm.backward(
        ff2.backward(dropout_backward(scaled(dx4, 0.5), c.d4), c.f2), c.nf2);
    Matrix<T> dx2 = dx3;
    {
      Matrix<T> g = pointwise_out.backward(c.swish_out, dropout_backward(dx3, c.d3));
      g = activate_backward(c.dwn_out, g, Activation::kSwish);
      g = depthwise_norm.backward(g, c.nd);
      g = depthwise.backward(c.glu_out, g);
      g = glu_backward(c.pw_in_out, g);
      g = pointwise_in.backward(c.conv_in, g);
      dx2 += conv_norm.backward(g, c.nc);
    }
    Matrix<T> dx1 = dx2;
    dx1 += attn_norm.backward(attn.backward(dropout_backward(dx2, c.d2), c.a), c.na);
    Matrix<T> dx = dx1;
    dx += ff1_norm.backward(
        ff1.backward(dropout_backward(scaled(dx1, 0.5), c.d1), c.f1), c.nf1);
    return dx;
  }

  template <typename F>
  void visit(F&& f) {
    visit_modules([&](auto& m) { m.visit(f); });
  }

 private:
  template <typename F>
  void visit_modules(F&& f) {
    f(ff1_norm);
    f(ff1);
    f(attn_norm);
    f(attn);
    f(conv_norm);
    f(pointwise_in);
    f(depthwise);
    f(depthwise_norm);
    f(pointwise_out);
    f(ff2_norm);
    f(ff2);
    f(out_norm);
  }
};

}  // namespace xane::nn
