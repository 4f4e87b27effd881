// include/xane/nn/tensor.hpp

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
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xane/common.hpp"

namespace xane::nn {

/// Dense row-major matrix. Activations are always T x D (frames x features).
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw Error(str_cat("matrix shape mismatch: ", rows_, "x", cols_, " vs ",
                          o.rows_, "x", o.cols_));
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  a += b;
  return a;
}

template <typename T>
Matrix<T> scaled(Matrix<T> a, double s) {
  for (auto& v : a.data()) v = static_cast<T>(v * s);
  return a;
}

/// Trainable tensor. Values use the model scalar; gradients and optimizer
/// statistics are kept in double.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> s, T fill = T(0))
      : name(std::move(n)), shape(std::move(s)) {
    const std::size_t count = std::accumulate(shape.begin(), shape.end(),
                                              std::size_t{1}, std::multiplies<>());
    value.assign(count, fill);
    grad.assign(count, 0.0);
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using Rng = std::mt19937_64;

/// Xavier/Glorot uniform initialization.
template <typename T>
void xavier_uniform(Parameter<T>& p, std::size_t fan_in, std::size_t fan_out,
                    Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : p.value) v = static_cast<T>(dist(rng));
}

/// Converts a parameter to another scalar type (same name/shape, grads zero).
template <typename To, typename From>
Parameter<To> cast_parameter(const Parameter<From>& p) {
  Parameter<To> out(p.name, p.shape);
  for (std::size_t i = 0; i < p.size(); ++i)
    out.value[i] = static_cast<To>(p.value[i]);
  return out;
}

}  // namespace xane::nn
