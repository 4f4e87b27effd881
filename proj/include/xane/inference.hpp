// include/xane/inference.hpp

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
#include <map>
#include <string>
#include <vector>

#include "xane/audio.hpp"
#include "xane/features.hpp"
#include "xane/labels.hpp"
#include "xane/model.hpp"

namespace xane {

/// Splits a normalized feature matrix into the model's 1 s inputs. A trailing
/// partial second is dropped.
inline std::vector<nn::Matrix<float>> segment_inputs(const FeatureMatrix& f,
                                                     const ModelConfig& cfg) {
  if (f.dim != cfg.input_dim())
    throw UserError(str_cat("feature dimension ", f.dim, " does not match the model (",
                            cfg.input_dim(), ")"));
  const std::size_t per = frames_per_segment(f.hop_ms);
  if (per != cfg.input_frames())
    throw UserError(str_cat("feature hop ", f.hop_ms, " ms does not match the model"));
  std::vector<nn::Matrix<float>> out;
  for (std::size_t s = 0; (s + 1) * per <= f.num_frames; ++s) {
    nn::Matrix<float> m(per, f.dim);
    std::copy_n(f.values.begin() + static_cast<std::ptrdiff_t>(s * per * f.dim), per * f.dim,
                m.data().begin());
    out.push_back(std::move(m));
  }
  return out;
}

/// Normalized MelFB inputs of a waveform.
inline std::vector<nn::Matrix<float>> waveform_inputs(const Waveform& w, const ModelConfig& cfg) {
  if (cfg.frontend != Frontend::kMelFb)
    throw UserError("imported-feature models need feature files, not audio");
  if (w.size() < static_cast<std::size_t>(kSampleRate))
    throw UserError("audio shorter than one 1 s segment");
  return segment_inputs(mvn(melfb(w)), cfg);
}

/// Normalized inputs of an imported feature file.
inline std::vector<nn::Matrix<float>> feature_file_inputs(const std::filesystem::path& path,
                                                          const ModelConfig& cfg) {
  FeatureMatrix f = read_features(path);
  if (!f.normalized) f = mvn(f);
  return segment_inputs(f, cfg);
}

/// Maps a manifest id to an imported feature file (CSV "id,path").
inline std::map<std::string, std::filesystem::path> read_feature_index(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError(str_cat("cannot open feature index ", path.string()));
  std::map<std::string, std::filesystem::path> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (n == 1 && line.rfind("id,", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw UserError(str_cat(path.string(), ":", n, ": expected id,path"));
    std::filesystem::path p = line.substr(comma + 1);
    if (p.is_relative()) p = path.parent_path() / p;
    out[line.substr(0, comma)] = p;
  }
  return out;
}

struct SegmentEstimate {
  std::array<double, kNumRegression> regression{};  // native units
  std::array<double, kNoiseClasses> noise_post{};
  std::array<double, kCodecClasses> codec_post{};
  std::array<double, kOverlapClasses> overlap_post{};
  std::vector<float> embedding;
};

struct UtteranceEstimate {
  std::array<double, kNumRegression> regression{};
  std::size_t noise_type = 0;
  std::size_t codec_type = 0;
  std::size_t overlap = 0;
  std::vector<float> embedding;
  std::vector<SegmentEstimate> segments;
};

/// Majority vote over per-segment argmax; ties go to the class with the
/// highest mean posterior.
template <std::size_t K>
std::size_t majority_vote(const std::vector<std::array<double, K>>& posteriors) {
  if (posteriors.empty()) throw Error("majority_vote: no segments");
  std::array<std::size_t, K> votes{};
  std::array<double, K> mass{};
  for (const auto& p : posteriors) {
    votes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())]++;
    for (std::size_t k = 0; k < K; ++k) mass[k] += p[k];
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < K; ++k)
    if (votes[k] > votes[best] || (votes[k] == votes[best] && mass[k] > mass[best])) best = k;
  return best;
}

inline UtteranceEstimate aggregate(std::vector<SegmentEstimate> segments) {
  if (segments.empty()) throw UserError("utterance has no full 1 s segment");
  UtteranceEstimate u;
  const double inv = 1.0 / static_cast<double>(segments.size());
  u.embedding.assign(segments.front().embedding.size(), 0.0f);
  std::vector<double> emb(u.embedding.size(), 0.0);
  std::vector<std::array<double, kNoiseClasses>> noise;
  std::vector<std::array<double, kCodecClasses>> codec;
  std::vector<std::array<double, kOverlapClasses>> overlap;
  for (const auto& s : segments) {
    for (std::size_t i = 0; i < kNumRegression; ++i) u.regression[i] += s.regression[i] * inv;
    for (std::size_t i = 0; i < emb.size(); ++i) emb[i] += s.embedding[i] * inv;
    noise.push_back(s.noise_post);
    codec.push_back(s.codec_post);
    overlap.push_back(s.overlap_post);
  }
  for (std::size_t i = 0; i < emb.size(); ++i) u.embedding[i] = static_cast<float>(emb[i]);
  u.noise_type = majority_vote(noise);
  u.codec_type = majority_vote(codec);
  u.overlap = majority_vote(overlap);
  u.segments = std::move(segments);
  return u;
}

template <std::size_t K>
std::array<double, K> posteriors(const std::array<double, K>& logits) {
  const auto p = nn::softmax(logits);
  std::array<double, K> out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

inline SegmentEstimate estimate_segment(const XaneModel<float>& model, const TargetStats& stats,
                                        const nn::Matrix<float>& x) {
  const auto out = model.forward(x);
  const auto t = TaskOutputs::from_heads(head_values<float>(out));
  SegmentEstimate s;
  for (std::size_t i = 0; i < kNumRegression; ++i)
    s.regression[i] = denormalize_target(t.regression[i], stats[i]);
  s.noise_post = posteriors(t.noise_logits);
  s.codec_post = posteriors(t.codec_logits);
  s.overlap_post = posteriors(t.overlap_logits);
  s.embedding.assign(out.embedding.data().begin(), out.embedding.data().end());
  return s;
}

/// Per-utterance estimates: mean of de-normalized regression outputs,
/// majority vote for classes and the mean segment embedding.
inline UtteranceEstimate infer_utterance(const XaneModel<float>& model, const TargetStats& stats,
                                         const std::vector<nn::Matrix<float>>& inputs) {
  std::vector<SegmentEstimate> segs;
  for (const auto& x : inputs) segs.push_back(estimate_segment(model, stats, x));
  return aggregate(std::move(segs));
}

inline nlohmann::json to_json(const UtteranceEstimate& u, const std::string& id) {
  nlohmann::json j;
  j["id"] = id;
  for (std::size_t i = 0; i < kNumRegression; ++i) j[std::string(kRegressionNames[i])] = u.regression[i];
  j["noise_type"] = kNoiseTypes[u.noise_type];
  j["codec_type"] = kCodecTypes[u.codec_type];
  j["overlap"] = u.overlap == 1;
  j["segments"] = u.segments.size();
  return j;
}

}  // namespace xane
