// include/xane/eval.hpp

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
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "xane/inference.hpp"
#include "xane/labels.hpp"

namespace xane {

// ---------------------------------------------------------------------------
// k-means.

struct ClusterResult {
  std::vector<std::size_t> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  std::vector<double> history;  // inertia after each assignment step (best restart)
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

inline std::vector<std::vector<double>> kmeanspp(const std::vector<std::vector<double>>& x,
                                                 std::size_t k, std::mt19937_64& rng) {
  std::vector<std::vector<double>> c;
  c.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
  std::vector<double> d2(x.size(), std::numeric_limits<double>::infinity());
  while (c.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += d2[i] = std::min(d2[i], sq_dist(x[i], c.back()));
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < x.size(); ++pick) {
        if (d2[pick] > 0.0 && r < d2[pick]) break;
        r -= d2[pick];
      }
      // Guard against rounding landing on an existing centroid.
      while (d2[pick] == 0.0) pick = (pick + 1) % x.size();
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
    }
    c.push_back(x[pick]);
  }
  return c;
}

inline ClusterResult lloyd(const std::vector<std::vector<double>>& x,
                           std::vector<std::vector<double>> c, int max_iter) {
  ClusterResult r;
  r.assignments.assign(x.size(), c.size());
  const std::size_t dim = x.front().size();
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      double bd = sq_dist(x[i], c[0]);
      for (std::size_t j = 1; j < c.size(); ++j) {
        const double d = sq_dist(x[i], c[j]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      changed |= r.assignments[i] != best;
      r.assignments[i] = best;
      inertia += bd;
    }
    if (!r.history.empty() && inertia > r.history.back() * (1.0 + 1e-12) + 1e-300)
      throw Error(str_cat("kmeans: inertia increased at iteration ", it));
    r.history.push_back(inertia);
    r.inertia = inertia;
    if (!changed) break;
    // Empty clusters keep their centroid, which keeps inertia monotone.
    std::vector<std::vector<double>> sum(c.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> n(c.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t d = 0; d < dim; ++d) sum[r.assignments[i]][d] += x[i][d];
      ++n[r.assignments[i]];
    }
    for (std::size_t j = 0; j < c.size(); ++j)
      if (n[j] > 0)
        for (std::size_t d = 0; d < dim; ++d) c[j][d] = sum[j][d] / static_cast<double>(n[j]);
  }
  r.centroids = std::move(c);
  return r;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// inertia wins. Deterministic in `seed`.
inline ClusterResult kmeans(const std::vector<std::vector<double>>& x, std::size_t k,
                            std::uint64_t seed, int restarts = 10, int max_iter = 300) {
  if (k < 2) throw UserError("kmeans: k must be at least 2");
  if (x.size() < k) throw UserError(str_cat("kmeans: ", x.size(), " points for k = ", k));
  for (const auto& v : x)
    if (v.size() != x.front().size()) throw UserError("kmeans: ragged input");
  std::mt19937_64 rng(seed);
  ClusterResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    auto res = detail::lloyd(x, detail::kmeanspp(x, k, rng), max_iter);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

// ---------------------------------------------------------------------------
// F1.

/// Macro F1 (percent) over every class seen in truth or predictions.
inline double macro_f1(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  if (pred.size() != truth.size()) throw UserError("macro_f1: size mismatch");
  if (truth.empty()) throw UserError("macro_f1: empty input");
  std::set<std::size_t> classes(truth.begin(), truth.end());
  classes.insert(pred.begin(), pred.end());
  double sum = 0.0;
  for (std::size_t c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && truth[i] == c) ++tp;
      else if (pred[i] == c) ++fp;
      else if (truth[i] == c) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }
  return 100.0 * sum / static_cast<double>(classes.size());
}

/// Maps each cluster to its majority class (ties: smallest class id) and
/// scores the mapped labels with macro F1.
inline double cluster_f1(const std::vector<std::size_t>& assignments,
                         const std::vector<std::size_t>& truth) {
  if (assignments.size() != truth.size()) throw UserError("cluster_f1: size mismatch");
  if (std::set<std::size_t>(truth.begin(), truth.end()).size() < 2)
    throw UserError("cluster_f1: ground truth has a single class");
  std::map<std::size_t, std::map<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) counts[assignments[i]][truth[i]]++;
  std::map<std::size_t, std::size_t> label;
  for (const auto& [cluster, hist] : counts) {
    std::size_t best = hist.begin()->first;
    for (const auto& [cls, n] : hist)
      if (n > hist.at(best)) best = cls;
    label[cluster] = best;
  }
  std::vector<std::size_t> pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) pred[i] = label[assignments[i]];
  return macro_f1(pred, truth);
}

// ---------------------------------------------------------------------------
// Reports.

using RegressionValues = std::array<std::optional<double>, kNumRegression>;

struct RegressionReport {
  std::array<std::optional<double>, kNumRegression> mae;
  std::array<std::size_t, kNumRegression> count{};
};

/// Per-task MAE in native units over utterances where both values exist.
inline RegressionReport regression_report(const std::vector<RegressionValues>& est,
                                          const std::vector<RegressionValues>& truth) {
  if (est.size() != truth.size()) throw UserError("regression_report: size mismatch");
  if (est.empty()) throw UserError("regression_report: no utterances");
  RegressionReport r;
  std::array<double, kNumRegression> sum{};
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t t = 0; t < kNumRegression; ++t)
      if (est[i][t] && truth[i][t]) {
        sum[t] += std::abs(*est[i][t] - *truth[i][t]);
        ++r.count[t];
      }
  for (std::size_t t = 0; t < kNumRegression; ++t)
    if (r.count[t] > 0) r.mae[t] = sum[t] / static_cast<double>(r.count[t]);
  return r;
}

/// Noise type, codec type and overlap of one utterance.
using ClassValues = std::array<std::size_t, 3>;
inline constexpr std::array<std::string_view, 3> kClassTaskNames{"noise_type", "codec_type",
                                                                  "overlap"};

inline std::array<double, 3> classification_report(const std::vector<ClassValues>& est,
                                                   const std::vector<ClassValues>& truth) {
  if (est.size() != truth.size()) throw UserError("classification_report: size mismatch");
  if (est.empty()) throw UserError("classification_report: no utterances");
  std::array<double, 3> f1{};
  for (std::size_t t = 0; t < 3; ++t) {
    std::vector<std::size_t> p, y;
    for (std::size_t i = 0; i < est.size(); ++i) {
      p.push_back(est[i][t]);
      y.push_back(truth[i][t]);
    }
    f1[t] = macro_f1(p, y);
  }
  return f1;
}

inline ClassValues class_truth(const AcousticLabels& l) {
  return {l.noise_type, l.codec_type, l.overlap ? std::size_t{1} : std::size_t{0}};
}

inline ClassValues class_estimate(const UtteranceEstimate& u) {
  return {u.noise_type, u.codec_type, u.overlap};
}

inline RegressionValues regression_estimate(const UtteranceEstimate& u) {
  RegressionValues v;
  for (std::size_t t = 0; t < kNumRegression; ++t) v[t] = u.regression[t];
  return v;
}

struct EvalReport {
  RegressionReport regression;
  std::array<double, 3> f1{};
  std::size_t utterances = 0;
  std::optional<double> rtf;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["utterances"] = r.utterances;
  nlohmann::json mae, counts;
  for (std::size_t t = 0; t < kNumRegression; ++t) {
    const std::string name(kRegressionNames[t]);
    mae[name] = r.regression.mae[t] ? nlohmann::json(*r.regression.mae[t]) : nlohmann::json("n/a");
    counts[name] = r.regression.count[t];
  }
  j["mae"] = mae;
  j["mae_counts"] = counts;
  nlohmann::json f1;
  for (std::size_t t = 0; t < 3; ++t) f1[std::string(kClassTaskNames[t])] = r.f1[t];
  j["f1_percent"] = f1;
  if (r.rtf) j["rtf"] = *r.rtf;
  return j;
}

inline std::string format_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "task            MAE        n\n";
  for (std::size_t t = 0; t < kNumRegression; ++t) {
    os << std::left << std::setw(14) << kRegressionNames[t] << std::right << std::setw(9);
    if (r.regression.mae[t])
      os << *r.regression.mae[t];
    else
      os << "n/a";
    os << std::setw(7) << r.regression.count[t] << '\n';
  }
  os << "task            F1 (%)\n";
  for (std::size_t t = 0; t < 3; ++t)
    os << std::left << std::setw(14) << kClassTaskNames[t] << std::right << std::setw(9) << r.f1[t]
       << '\n';
  if (r.rtf) os << "RTF " << *r.rtf << '\n';
  os << "utterances " << r.utterances << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Real-time factor.

/// Feature extraction plus forward time over audio duration, single
/// threaded and excluding file I/O. Median of `runs` passes.
inline double measure_rtf(const XaneModel<float>& model, const TargetStats& stats,
                          const std::vector<Waveform>& audio, int runs = 3) {
  double seconds = 0.0;
  for (const auto& w : audio) seconds += w.duration_s();
  if (seconds < 10.0) throw UserError(str_cat("RTF needs at least 10 s of audio, got ", seconds));
  // Untimed pass so one-off setup (FFT plans, allocations) is excluded.
  (void)infer_utterance(model, stats, waveform_inputs(audio.front(), model.config()));
  std::vector<double> rtf;
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& w : audio) {
      const auto inputs = waveform_inputs(w, model.config());
      (void)infer_utterance(model, stats, inputs);
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    rtf.push_back(dt.count() / seconds);
  }
  std::sort(rtf.begin(), rtf.end());
  return rtf[rtf.size() / 2];
}

// ---------------------------------------------------------------------------
// CSV interchange.

inline void write_embeddings_csv(const std::filesystem::path& path,
                                 const std::vector<std::string>& ids,
                                 const std::vector<std::vector<float>>& emb) {
  std::ofstream out(path);
  if (!out) throw UserError(str_cat("cannot write ", path.string()));
  out << std::setprecision(9);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (float v : emb[i]) out << ',' << v;
    out << '\n';
  }
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct EmbeddingTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;
};

inline EmbeddingTable read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError(str_cat("cannot open embeddings ", path.string()));
  EmbeddingTable t;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < 2) throw UserError(str_cat(path.string(), ":", n, ": expected id and values"));
    std::vector<double> v;
    try {
      for (std::size_t i = 1; i < cells.size(); ++i) v.push_back(std::stod(cells[i]));
    } catch (const std::exception&) {
      throw UserError(str_cat(path.string(), ":", n, ": non-numeric embedding value"));
    }
    if (!t.values.empty() && v.size() != t.values.front().size())
      throw UserError(str_cat(path.string(), ":", n, ": inconsistent embedding size"));
    t.ids.push_back(cells[0]);
    t.values.push_back(std::move(v));
  }
  return t;
}

inline std::map<std::string, std::string> read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError(str_cat("cannot open labels ", path.string()));
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw UserError(str_cat(path.string(), ":", n, ": expected id,label"));
    out[cells[0]] = cells[1];
  }
  return out;
}

/// Reverberation group used for clustering: "dry" below 150 ms T60,
/// "reverberant" above 600 ms, nothing in between.
inline std::optional<std::string> t60_group(double t60_ms) {
  if (t60_ms < 150.0) return "dry";
  if (t60_ms > 600.0) return "reverberant";
  return std::nullopt;
}

}  // namespace xane
