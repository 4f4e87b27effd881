// include/xane/config.hpp

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

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <toml.hpp>
#include "xane/synth.hpp"
#include "xane/train.hpp"

namespace xane {

// TOML run configuration. Unknown keys are errors; relative paths resolve
// against the config file's directory.

namespace config_detail {

inline void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (auto a : allowed) ok |= key.str() == a;
    if (!ok) throw UserError(str_cat("unknown key '", key.str(), "' in ", where));
  }
}

template <typename T>
std::optional<T> get(const toml::table& t, std::string_view key) {
  const auto node = t[key];
  if (!node) return std::nullopt;
  const auto v = node.value<T>();
  if (!v) throw UserError(str_cat("config key '", key, "' has the wrong type"));
  return v;
}

inline Range get_range(const toml::table& t, std::string_view key, Range dflt) {
  if (!t[key]) return dflt;
  const auto* arr = t[key].as_array();
  if (!arr || arr->size() != 2) throw UserError(str_cat("config key '", key, "' must be [lo, hi]"));
  const auto lo = (*arr)[0].value<double>(), hi = (*arr)[1].value<double>();
  if (!lo || !hi) throw UserError(str_cat("config key '", key, "' must hold numbers"));
  return {*lo, *hi};
}

inline Vec3 get_vec3(const toml::table& t, std::string_view key, Vec3 dflt) {
  if (!t[key]) return dflt;
  const auto* arr = t[key].as_array();
  if (!arr || arr->size() != 3) throw UserError(str_cat("config key '", key, "' must have 3 numbers"));
  Vec3 v;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto x = (*arr)[i].value<double>();
    if (!x) throw UserError(str_cat("config key '", key, "' must hold numbers"));
    v[i] = *x;
  }
  return v;
}

inline std::vector<std::string> get_strings(const toml::table& t, std::string_view key) {
  std::vector<std::string> out;
  const auto* arr = t[key].as_array();
  if (!arr) throw UserError(str_cat("config key '", key, "' must be an array of strings"));
  for (const auto& n : *arr) {
    const auto s = n.value<std::string>();
    if (!s) throw UserError(str_cat("config key '", key, "' must be an array of strings"));
    out.push_back(*s);
  }
  return out;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

inline toml::table parse_file(const std::filesystem::path& path) {
  try {
    return toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e;
    throw UserError(str_cat("cannot parse config ", path.string(), ": ", os.str()));
  }
}

inline toml::array to_array(const Range& r) { return toml::array{r.lo, r.hi}; }
inline toml::array to_array(const Vec3& v) { return toml::array{v[0], v[1], v[2]}; }

}  // namespace config_detail

inline SynthConfig synth_config_from_toml(const toml::table& t, const std::filesystem::path& base) {
  using namespace config_detail;
  check_keys(t, {"output_dir", "seed", "threads", "clean_dirs", "noise_root", "noise_types",
                 "val_ratio", "pesq_csv", "counts", "ranges", "codec"},
             "synth config");
  SynthConfig c;
  if (auto v = get<std::string>(t, "output_dir")) c.output_dir = resolve(base, *v);
  if (auto v = get<int64_t>(t, "seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get<int64_t>(t, "threads")) c.threads = static_cast<int>(*v);
  if (t["clean_dirs"])
    for (const auto& d : get_strings(t, "clean_dirs")) c.clean_dirs.push_back(resolve(base, d));
  if (auto v = get<std::string>(t, "noise_root")) c.noise_root = resolve(base, *v);
  if (t["noise_types"]) c.noise_types = get_strings(t, "noise_types");
  if (auto v = get<double>(t, "val_ratio")) c.val_ratio = *v;
  if (auto v = get<std::string>(t, "pesq_csv")) c.pesq_csv = resolve(base, *v);

  if (const auto* counts = t["counts"].as_table()) {
    check_keys(*counts, {"per_group", "uncompressed", "opus_music", "opus_speech"}, "[counts]");
    if (auto n = get<int64_t>(*counts, "per_group")) {
      if (*n < 0) throw UserError("counts.per_group must be non-negative");
      for (auto& g : c.counts) g = {static_cast<std::size_t>(*n), static_cast<std::size_t>(*n)};
    }
    for (std::size_t k = 0; k < kCodecClasses; ++k) {
      const std::string key(kCodecTypes[k]);
      if (!(*counts)[key]) continue;
      const auto* arr = (*counts)[key].as_array();
      if (!arr || arr->size() != 2)
        throw UserError(str_cat("counts.", key, " must be [no_overlap, overlap]"));
      for (std::size_t o = 0; o < 2; ++o) {
        const auto n = (*arr)[o].value<int64_t>();
        if (!n || *n < 0) throw UserError(str_cat("counts.", key, " must hold non-negative integers"));
        c.counts[k][o] = static_cast<std::size_t>(*n);
      }
    }
  } else if (t["counts"]) {
    throw UserError("[counts] must be a table");
  }

  if (const auto* r = t["ranges"].as_table()) {
    check_keys(*r, {"snr_db", "sir_db", "level_dbfs", "beta", "bitrate_kbps", "room_min",
                    "room_max", "wall_margin", "min_distance"},
               "[ranges]");
    c.snr_db = get_range(*r, "snr_db", c.snr_db);
    c.sir_db = get_range(*r, "sir_db", c.sir_db);
    c.level_dbfs = get_range(*r, "level_dbfs", c.level_dbfs);
    c.beta = get_range(*r, "beta", c.beta);
    c.bitrate_kbps = get_range(*r, "bitrate_kbps", c.bitrate_kbps);
    c.room_min = get_vec3(*r, "room_min", c.room_min);
    c.room_max = get_vec3(*r, "room_max", c.room_max);
    if (auto v = get<double>(*r, "wall_margin")) c.wall_margin = *v;
    if (auto v = get<double>(*r, "min_distance")) c.min_distance = *v;
  } else if (t["ranges"]) {
    throw UserError("[ranges] must be a table");
  }

  if (const auto* codec = t["codec"].as_table()) {
    check_keys(*codec, {"opus_music", "opus_speech"}, "[codec]");
    for (std::size_t k = 1; k < kCodecClasses; ++k)
      if (auto v = get<std::string>(*codec, kCodecTypes[k])) c.codec_commands[k] = *v;
  } else if (t["codec"]) {
    throw UserError("[codec] must be a table");
  }
  return c;
}

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
  return synth_config_from_toml(config_detail::parse_file(path), path.parent_path());
}

inline toml::table to_toml(const SynthConfig& c) {
  using config_detail::to_array;
  toml::array clean, types;
  for (const auto& d : c.clean_dirs) clean.push_back(d.string());
  for (const auto& t : c.noise_types) types.push_back(t);
  toml::table counts;
  for (std::size_t k = 0; k < kCodecClasses; ++k)
    counts.insert(std::string(kCodecTypes[k]),
                  toml::array{static_cast<int64_t>(c.counts[k][0]), static_cast<int64_t>(c.counts[k][1])});
  toml::table codec;
  for (std::size_t k = 1; k < kCodecClasses; ++k)
    codec.insert(std::string(kCodecTypes[k]), c.codec_commands[k]);
  return toml::table{
      {"output_dir", c.output_dir.string()},
      {"seed", static_cast<int64_t>(c.seed)},
      {"threads", c.threads},
      {"clean_dirs", clean},
      {"noise_root", c.noise_root.string()},
      {"noise_types", types},
      {"val_ratio", c.val_ratio},
      {"pesq_csv", c.pesq_csv.string()},
      {"counts", counts},
      {"ranges", toml::table{{"snr_db", to_array(c.snr_db)},
                             {"sir_db", to_array(c.sir_db)},
                             {"level_dbfs", to_array(c.level_dbfs)},
                             {"beta", to_array(c.beta)},
                             {"bitrate_kbps", to_array(c.bitrate_kbps)},
                             {"room_min", to_array(c.room_min)},
                             {"room_max", to_array(c.room_max)},
                             {"wall_margin", c.wall_margin},
                             {"min_distance", c.min_distance}}},
      {"codec", codec}};
}

/// Training run: hyperparameters plus data and output locations.
struct TrainRun {
  TrainConfig train;
  std::filesystem::path train_manifest, val_manifest, output, log;
};

inline ModelConfig model_config_from_toml(const toml::table& t) {
  using namespace config_detail;
  check_keys(t, {"preset", "frontend", "encoder", "encoder_layers", "model_dim", "heads", "ffn_dim",
                 "embedding_dim", "conv_kernel", "conv_strides", "conformer_kernel",
                 "positional_encoding", "pooling", "dropout"},
             "[model]");
  ModelConfig m;
  const std::string preset = get<std::string>(t, "preset").value_or("melfb_transformer");
  if (preset == "melfb_transformer")
    m = ModelConfig::melfb_transformer();
  else if (preset == "imported_transformer")
    m = ModelConfig::imported_transformer();
  else if (preset == "tiny")
    m = ModelConfig::tiny();
  else
    throw UserError(str_cat("unknown model preset '", preset, "'"));
  const auto size = [&](std::string_view key, std::size_t& out) {
    if (auto v = get<int64_t>(t, key)) {
      if (*v < 0) throw UserError(str_cat("model.", key, " must be non-negative"));
      out = static_cast<std::size_t>(*v);
    }
  };
  if (auto v = get<std::string>(t, "frontend")) m.frontend = parse_frontend(*v);
  if (auto v = get<std::string>(t, "encoder")) m.encoder = parse_encoder(*v);
  if (auto v = get<std::string>(t, "pooling")) m.pooling = parse_pooling(*v);
  size("encoder_layers", m.encoder_layers);
  size("model_dim", m.model_dim);
  size("heads", m.heads);
  size("ffn_dim", m.ffn_dim);
  size("embedding_dim", m.embedding_dim);
  size("conv_kernel", m.conv_kernel);
  size("conformer_kernel", m.conformer_kernel);
  if (t["conv_strides"]) {
    const auto* arr = t["conv_strides"].as_array();
    if (!arr || arr->size() != 2) throw UserError("model.conv_strides must have two entries");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto s = (*arr)[i].value<int64_t>();
      if (!s || *s < 1) throw UserError("model.conv_strides must be positive integers");
      m.conv_strides[i] = static_cast<std::size_t>(*s);
    }
  }
  if (auto v = get<bool>(t, "positional_encoding")) m.positional_encoding = *v;
  if (auto v = get<double>(t, "dropout")) m.dropout = *v;
  m.validate();
  return m;
}

inline TrainRun train_run_from_toml(const toml::table& t, const std::filesystem::path& base) {
  using namespace config_detail;
  check_keys(t, {"train_manifest", "val_manifest", "output", "log", "feature_index", "epochs",
                 "batch_size", "learning_rate", "patience", "lr_factor", "seed", "threads", "model"},
             "train config");
  TrainRun r;
  if (auto v = get<std::string>(t, "train_manifest")) r.train_manifest = resolve(base, *v);
  if (auto v = get<std::string>(t, "val_manifest")) r.val_manifest = resolve(base, *v);
  if (auto v = get<std::string>(t, "output")) r.output = resolve(base, *v);
  if (auto v = get<std::string>(t, "log")) r.log = resolve(base, *v);
  auto& c = r.train;
  if (auto v = get<std::string>(t, "feature_index")) c.feature_index = resolve(base, *v);
  if (auto v = get<int64_t>(t, "epochs")) c.epochs = static_cast<int>(*v);
  if (auto v = get<int64_t>(t, "batch_size")) {
    if (*v < 1) throw UserError("batch_size must be at least 1");
    c.batch_size = static_cast<std::size_t>(*v);
  }
  if (auto v = get<double>(t, "learning_rate")) c.learning_rate = *v;
  if (auto v = get<int64_t>(t, "patience")) c.patience = static_cast<int>(*v);
  if (auto v = get<double>(t, "lr_factor")) c.lr_factor = *v;
  if (auto v = get<int64_t>(t, "seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get<int64_t>(t, "threads")) c.threads = static_cast<int>(*v);
  if (const auto* m = t["model"].as_table())
    c.model = model_config_from_toml(*m);
  else if (t["model"])
    throw UserError("[model] must be a table");
  return r;
}

inline TrainRun load_train_run(const std::filesystem::path& path) {
  return train_run_from_toml(config_detail::parse_file(path), path.parent_path());
}

inline toml::table to_toml(const TrainRun& r) {
  const auto& c = r.train;
  const auto& m = c.model;
  toml::table model{{"frontend", to_string(m.frontend)},
                    {"encoder", to_string(m.encoder)},
                    {"encoder_layers", static_cast<int64_t>(m.encoder_layers)},
                    {"model_dim", static_cast<int64_t>(m.model_dim)},
                    {"heads", static_cast<int64_t>(m.heads)},
                    {"ffn_dim", static_cast<int64_t>(m.ffn_dim)},
                    {"embedding_dim", static_cast<int64_t>(m.embedding_dim)},
                    {"conv_kernel", static_cast<int64_t>(m.conv_kernel)},
                    {"conv_strides", toml::array{static_cast<int64_t>(m.conv_strides[0]),
                                                 static_cast<int64_t>(m.conv_strides[1])}},
                    {"conformer_kernel", static_cast<int64_t>(m.conformer_kernel)},
                    {"positional_encoding", m.positional_encoding},
                    {"pooling", to_string(m.pooling)},
                    {"dropout", m.dropout}};
  return toml::table{{"train_manifest", r.train_manifest.string()},
                     {"val_manifest", r.val_manifest.string()},
                     {"output", r.output.string()},
                     {"log", r.log.string()},
                     {"feature_index", c.feature_index.string()},
                     {"epochs", c.epochs},
                     {"batch_size", static_cast<int64_t>(c.batch_size)},
                     {"learning_rate", c.learning_rate},
                     {"patience", c.patience},
                     {"lr_factor", c.lr_factor},
                     {"seed", static_cast<int64_t>(c.seed)},
                     {"threads", c.threads},
                     {"model", model}};
}

inline void write_toml(const toml::table& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UserError(str_cat("cannot write ", path.string()));
  out << t << '\n';
}

}  // namespace xane
