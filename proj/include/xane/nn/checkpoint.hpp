// include/xane/nn/checkpoint.hpp

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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "xane/audio.hpp"
#include "xane/common.hpp"

namespace xane::nn {

inline constexpr std::size_t kNumRegressionTasks = 11;
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

struct TaskStats {
  float mean = 0.0f;
  float sd = 1.0f;
  bool operator==(const TaskStats&) const = default;
};

/// Named weights plus per-task target normalization statistics.
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::array<TaskStats, kNumRegressionTasks> stats{};
  std::uint32_t epoch = 0;
  float val_loss = 0.0f;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
  bool operator==(const Checkpoint&) const = default;
};

// "XCKP", u32 version, u32 count, per tensor {u32 name_len, name, u32 rank,
// u32 dims..., f32 data}, 11 x {f32 mean, f32 sd}, u32 epoch, f32 val_loss.
inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  using xane::detail::put32;
  const auto putf = [](std::vector<std::uint8_t>& out, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put32(out, u);
  };
  std::vector<std::uint8_t> out{'X', 'C', 'K', 'P'};
  put32(out, kCheckpointVersion);
  put32(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data) putf(out, v);
  }
  for (const auto& s : c.stats) {
    putf(out, s.mean);
    putf(out, s.sd);
  }
  put32(out, c.epoch);
  putf(out, c.val_loss);
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> b,
                                    const std::string& what = "<buffer>") {
  std::size_t pos = 0;
  const auto need = [&](std::size_t n) {
    if (b.size() - pos < n) throw UserError(str_cat(what, ": truncated checkpoint"));
  };
  const auto u32 = [&] {
    need(4);
    const auto v = xane::detail::le32(b.data() + pos);
    pos += 4;
    return v;
  };
  const auto f32 = [&] {
    const std::uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  };
  need(4);
  if (std::memcmp(b.data(), "XCKP", 4) != 0)
    throw UserError(str_cat(what, ": not a checkpoint file"));
  pos = 4;
  if (const auto v = u32(); v != kCheckpointVersion)
    throw UserError(str_cat(what, ": checkpoint version ", v));
  Checkpoint c;
  const std::uint32_t count = u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint32_t len = u32();
    need(len);
    t.name.assign(reinterpret_cast<const char*>(b.data() + pos), len);
    pos += len;
    const std::uint32_t rank = u32();
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(u32());
      n *= t.shape.back();
    }
    need(n * 4);
    t.data.resize(n);
    for (auto& v : t.data) v = f32();
    c.tensors.push_back(std::move(t));
  }
  for (auto& s : c.stats) {
    s.mean = f32();
    s.sd = f32();
  }
  c.epoch = u32();
  c.val_loss = f32();
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError(str_cat("cannot write checkpoint ", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError(str_cat("cannot open checkpoint ", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

/// Elementwise mean of two checkpoints with identical layout and statistics.
inline Checkpoint average_checkpoints(const Checkpoint& a, const Checkpoint& b) {
  if (a.tensors.size() != b.tensors.size())
    throw Error("average_checkpoints: tensor count differs");
  if (a.stats != b.stats)
    throw Error("average_checkpoints: normalization statistics differ");
  Checkpoint out = a;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const auto& ta = a.tensors[i];
    const auto& tb = b.tensors[i];
    if (ta.name != tb.name)
      throw Error(str_cat("average_checkpoints: name mismatch ", ta.name, " vs ", tb.name));
    if (ta.shape != tb.shape)
      throw Error(str_cat("average_checkpoints: shape mismatch for ", ta.name));
    for (std::size_t k = 0; k < ta.data.size(); ++k)
      out.tensors[i].data[k] = static_cast<float>(
          0.5 * (static_cast<double>(ta.data[k]) + static_cast<double>(tb.data[k])));
  }
  out.epoch = std::max(a.epoch, b.epoch);
  out.val_loss = 0.5f * (a.val_loss + b.val_loss);
  return out;
}

}  // namespace xane::nn
