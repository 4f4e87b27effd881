// include/xane/common.hpp

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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace xane {

inline constexpr int kSampleRate = 16000;
inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data, configuration or arguments (CLI exit code 2).
class UserError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or inference (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

template <typename... Args>
std::string str_cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }

inline double from_db20(double db) { return std::pow(10.0, db / 20.0); }

// Log verbosity: 0 = warnings only, 1 = progress, 2 = debug.
inline int& log_level() {
  static int level = 1;
  return level;
}

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

template <typename... Args>
void log_info(const Args&... args) {
  if (log_level() < 1) return;
  std::lock_guard<std::mutex> lock(log_mutex());
  std::clog << "LOG " << str_cat(args...) << '\n';
}

template <typename... Args>
void log_warn(const Args&... args) {
  std::lock_guard<std::mutex> lock(log_mutex());
  std::clog << "WARNING " << str_cat(args...) << '\n';
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write
/// results by index, so output order never depends on scheduling.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace xane
