// include/xane/labels.hpp

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
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "xane/common.hpp"
#include "xane/model.hpp"

namespace xane {

inline constexpr std::array<std::string_view, kNoiseClasses> kNoiseTypes{
    "ambient", "babble", "music", "other", "white"};
inline constexpr std::array<std::string_view, kCodecClasses> kCodecTypes{
    "uncompressed", "opus_music", "opus_speech"};

inline std::size_t noise_index(std::string_view name) {
  for (std::size_t i = 0; i < kNoiseTypes.size(); ++i)
    if (kNoiseTypes[i] == name) return i;
  throw UserError(str_cat("unknown noise type '", name, "'"));
}

inline std::size_t codec_index(std::string_view name) {
  for (std::size_t i = 0; i < kCodecTypes.size(); ++i)
    if (kCodecTypes[i] == name) return i;
  throw UserError(str_cat("unknown codec type '", name, "'"));
}

struct SegmentLabels {
  double start_ms = 0.0;
  double vad = 0.0;
  std::optional<double> snr_db;

  bool operator==(const SegmentLabels&) const = default;
};

/// Ground truth for one utterance.
struct AcousticLabels {
  double c50_db = 0.0;
  double c5_db = 0.0;
  double t60_ms = 0.0;
  double drr_db = 0.0;
  double rvol_m3 = 0.0;
  double refc = 0.0;
  double estoi = 0.0;
  std::optional<double> pesq;
  std::optional<double> bitrate_kbps;
  std::size_t noise_type = 0;
  std::size_t codec_type = 0;
  bool overlap = false;
  std::vector<SegmentLabels> segments;

  bool operator==(const AcousticLabels&) const = default;
};

struct ManifestEntry {
  std::string id;
  std::string degraded;
  std::string clean;
  std::string rir;
  std::string group_codec;
  bool group_overlap = false;
  AcousticLabels labels;

  bool operator==(const ManifestEntry&) const = default;
};

inline nlohmann::json to_json(const AcousticLabels& l) {
  nlohmann::json j;
  j["c50_db"] = l.c50_db;
  j["c5_db"] = l.c5_db;
  j["t60_ms"] = l.t60_ms;
  j["drr_db"] = l.drr_db;
  j["rvol_m3"] = l.rvol_m3;
  j["refc"] = l.refc;
  j["estoi"] = l.estoi;
  if (l.pesq) j["pesq"] = *l.pesq;
  if (l.bitrate_kbps) j["bitrate_kbps"] = *l.bitrate_kbps;
  j["noise_type"] = kNoiseTypes[l.noise_type];
  j["codec_type"] = kCodecTypes[l.codec_type];
  j["overlap"] = l.overlap;
  auto segs = nlohmann::json::array();
  for (const auto& s : l.segments) {
    nlohmann::json sj{{"start_ms", s.start_ms}, {"vad", s.vad}};
    if (s.snr_db) sj["snr_db"] = *s.snr_db;
    segs.push_back(sj);
  }
  j["segments"] = segs;
  return j;
}

inline AcousticLabels labels_from_json(const nlohmann::json& j) {
  AcousticLabels l;
  l.c50_db = j.at("c50_db").get<double>();
  l.c5_db = j.at("c5_db").get<double>();
  l.t60_ms = j.at("t60_ms").get<double>();
  l.drr_db = j.at("drr_db").get<double>();
  l.rvol_m3 = j.at("rvol_m3").get<double>();
  l.refc = j.at("refc").get<double>();
  l.estoi = j.at("estoi").get<double>();
  if (j.contains("pesq")) l.pesq = j["pesq"].get<double>();
  if (j.contains("bitrate_kbps")) l.bitrate_kbps = j["bitrate_kbps"].get<double>();
  l.noise_type = noise_index(j.at("noise_type").get<std::string>());
  l.codec_type = codec_index(j.at("codec_type").get<std::string>());
  l.overlap = j.at("overlap").get<bool>();
  for (const auto& sj : j.at("segments")) {
    SegmentLabels s;
    s.start_ms = sj.at("start_ms").get<double>();
    s.vad = sj.at("vad").get<double>();
    if (sj.contains("snr_db")) s.snr_db = sj["snr_db"].get<double>();
    l.segments.push_back(s);
  }
  return l;
}

inline nlohmann::json to_json(const ManifestEntry& e) {
  return {{"id", e.id},
          {"degraded", e.degraded},
          {"clean", e.clean},
          {"rir", e.rir},
          {"group_codec", e.group_codec},
          {"group_overlap", e.group_overlap},
          {"labels", to_json(e.labels)}};
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.degraded = j.at("degraded").get<std::string>();
  e.clean = j.at("clean").get<std::string>();
  e.rir = j.at("rir").get<std::string>();
  e.group_codec = j.at("group_codec").get<std::string>();
  e.group_overlap = j.at("group_overlap").get<bool>();
  e.labels = labels_from_json(j.at("labels"));
  return e;
}

inline void write_manifest(const std::vector<ManifestEntry>& entries,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UserError(str_cat("cannot write manifest ", path.string()));
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
}

/// Reads a JSON-lines manifest. Relative audio paths are resolved against
/// the manifest's directory. Malformed lines are reported by number.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError(str_cat("cannot open manifest ", path.string()));
  const auto base = path.parent_path();
  const auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw UserError(str_cat(path.string(), ":", n, ": malformed manifest line: ", e.what()));
    } catch (const UserError& e) {
      throw UserError(str_cat(path.string(), ":", n, ": ", e.what()));
    }
    resolve(out.back().degraded);
    resolve(out.back().clean);
    resolve(out.back().rir);
  }
  return out;
}

/// Raw (unnormalized) regression targets and class labels of one segment.
inline SegmentTargets segment_targets(const AcousticLabels& l, std::size_t seg) {
  if (seg >= l.segments.size()) throw Error("segment_targets: segment out of range");
  const auto& s = l.segments[seg];
  SegmentTargets y;
  const auto set = [&](RegressionTask t, std::optional<double> v) {
    y.present[t] = v.has_value();
    y.regression[t] = v.value_or(0.0);
  };
  set(kC50, l.c50_db);
  set(kT60, l.t60_ms);
  set(kDrr, l.drr_db);
  set(kC5, l.c5_db);
  set(kRvol, l.rvol_m3);
  set(kRefc, l.refc);
  set(kPesq, l.pesq);
  set(kEstoi, l.estoi);
  set(kBitrate, l.bitrate_kbps);
  set(kSnr, s.snr_db);
  set(kVad, s.vad);
  y.noise = l.noise_type;
  y.codec = l.codec_type;
  y.overlap = l.overlap ? 1 : 0;
  y.vad_fraction = s.vad;
  return y;
}

/// Utterance-level regression truth: fixed labels as stored, SNR and VAD as
/// the mean over segments that carry them.
inline std::array<std::optional<double>, kNumRegression> utterance_truth(const AcousticLabels& l) {
  std::array<std::optional<double>, kNumRegression> t;
  t[kC50] = l.c50_db;
  t[kT60] = l.t60_ms;
  t[kDrr] = l.drr_db;
  t[kC5] = l.c5_db;
  t[kRvol] = l.rvol_m3;
  t[kRefc] = l.refc;
  t[kPesq] = l.pesq;
  t[kEstoi] = l.estoi;
  t[kBitrate] = l.bitrate_kbps;
  double snr = 0.0, vad = 0.0;
  std::size_t n_snr = 0;
  for (const auto& s : l.segments) {
    if (s.snr_db) {
      snr += *s.snr_db;
      ++n_snr;
    }
    vad += s.vad;
  }
  if (n_snr > 0) t[kSnr] = snr / static_cast<double>(n_snr);
  if (!l.segments.empty()) t[kVad] = vad / static_cast<double>(l.segments.size());
  return t;
}

}  // namespace xane
