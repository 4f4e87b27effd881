// include/xane/train.hpp

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
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "xane/inference.hpp"
#include "xane/labels.hpp"
#include "xane/model.hpp"
#include "xane/nn/adam.hpp"

namespace xane {

struct TrainConfig {
  ModelConfig model = ModelConfig::melfb_transformer();
  int epochs = 60;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  int patience = 16;
  double lr_factor = 0.5;
  std::uint64_t seed = 1;
  int threads = 1;                      // feature extraction only
  std::filesystem::path feature_index;  // imported frontend

  void validate() const {
    model.validate();
    if (epochs < 1) throw UserError("epochs must be at least 1");
    if (batch_size < 1) throw UserError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw UserError("learning_rate must be positive");
    if (patience < 0) throw UserError("patience must be non-negative");
    if (!(lr_factor > 0.0 && lr_factor <= 1.0)) throw UserError("lr_factor must lie in (0, 1]");
    if (model.frontend == Frontend::kImported && feature_index.empty())
      throw UserError("imported-feature training needs a feature index");
  }
};

/// Segment inputs with raw targets, in manifest order.
struct SegmentSet {
  std::vector<nn::Matrix<float>> inputs;
  std::vector<SegmentTargets> targets;
  std::vector<std::size_t> utterance;  // source entry per segment

  std::size_t size() const { return inputs.size(); }
};

/// Features for every manifest entry. Audio is read from `degraded`; the
/// imported frontend looks entries up in the feature index instead.
inline SegmentSet load_segments(const std::vector<ManifestEntry>& entries, const ModelConfig& cfg,
                                const std::filesystem::path& feature_index = {}, int threads = 1) {
  std::map<std::string, std::filesystem::path> index;
  if (cfg.frontend == Frontend::kImported) index = read_feature_index(feature_index);
  std::vector<std::vector<nn::Matrix<float>>> per(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    const auto& e = entries[i];
    if (cfg.frontend == Frontend::kMelFb) {
      per[i] = waveform_inputs(read_wav(e.degraded), cfg);
    } else {
      const auto it = index.find(e.id);
      if (it == index.end()) throw UserError(str_cat("no features for ", e.id, " in the index"));
      per[i] = feature_file_inputs(it->second, cfg);
    }
  });
  SegmentSet s;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    // Labels cover exactly the full seconds of the audio.
    const std::size_t n = std::min(per[i].size(), entries[i].labels.segments.size());
    for (std::size_t k = 0; k < n; ++k) {
      s.inputs.push_back(std::move(per[i][k]));
      s.targets.push_back(segment_targets(entries[i].labels, k));
      s.utterance.push_back(i);
    }
  }
  return s;
}

/// Per-task z-score statistics over the segments that carry each target.
inline TargetStats compute_target_stats(const std::vector<SegmentTargets>& targets) {
  TargetStats stats{};
  for (std::size_t t = 0; t < kNumRegression; ++t) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& y : targets) {
      if (!y.present[t]) continue;
      sum += y.regression[t];
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    for (const auto& y : targets)
      if (y.present[t]) sq += (y.regression[t] - mean) * (y.regression[t] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    stats[t].mean = static_cast<float>(mean);
    stats[t].sd = sd > 1e-6 ? static_cast<float>(sd) : 1.0f;
  }
  return stats;
}

inline SegmentTargets normalize_targets(SegmentTargets y, const TargetStats& stats) {
  for (std::size_t t = 0; t < kNumRegression; ++t)
    if (y.present[t]) y.regression[t] = normalize_target(y.regression[t], stats[t]);
  return y;
}

/// Fixed weights for validation so losses are comparable across epochs.
inline constexpr LossSchedule kValidationWeights{0.3, 1.0};

inline double validation_loss(const XaneModel<float>& model, const SegmentSet& val,
                              const TargetStats& stats) {
  if (val.size() == 0) throw UserError("validation set is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto out = model.forward(val.inputs[i]);
    total += segment_loss(head_values<float>(out), normalize_targets(val.targets[i], stats),
                          kValidationWeights)
                 .total;
  }
  total /= static_cast<double>(val.size());
  if (!std::isfinite(total)) throw NumericError("non-finite validation loss");
  return total;
}

struct EpochLog {
  int epoch = 0;
  LossSchedule weights;
  BatchLoss train;
  double val_loss = 0.0;
  double lr = 0.0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Mini-batch Adam training with the staged loss weights, plateau learning
/// rate decay and averaging of the two best validation checkpoints.
inline TrainResult train(const SegmentSet& train_set, const SegmentSet& val_set,
                         const TrainConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.size() == 0) throw UserError("training set is empty");
  if (val_set.size() == 0) throw UserError("validation set is empty");

  const TargetStats stats = compute_target_stats(train_set.targets);
  std::vector<SegmentTargets> targets;
  targets.reserve(train_set.size());
  for (const auto& y : train_set.targets) targets.push_back(normalize_targets(y, stats));

  XaneModel<float> model(cfg.model);
  model.init(cfg.seed);
  const auto params = model.parameters();
  std::vector<nn::AdamState> adam(params.size());
  nn::PlateauSchedule schedule(cfg.learning_rate, cfg.patience, cfg.lr_factor);
  nn::Rng shuffle_rng(cfg.seed + 1);
  nn::Rng dropout_rng(cfg.seed + 2);

  struct Best {
    double loss;
    nn::Checkpoint ckpt;
  };
  std::vector<Best> best;  // at most two, ascending loss

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossSchedule w = loss_weights(epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[std::uniform_int_distribution<std::size_t>(0, i - 1)(shuffle_rng)]);
    EpochLog log;
    log.epoch = epoch;
    log.weights = w;
    log.lr = schedule.lr();
    std::vector<const nn::Matrix<float>*> xs;
    std::vector<SegmentTargets> ys;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      xs.clear();
      ys.clear();
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(&train_set.inputs[order[i]]);
        ys.push_back(targets[order[i]]);
      }
      const BatchLoss b = accumulate_gradients<float>(model, xs, ys, w, &dropout_rng);
      for (std::size_t p = 0; p < params.size(); ++p) nn::adam_step(*params[p], adam[p], schedule.lr());
      // Epoch means weighted by batch size.
      const double k = static_cast<double>(end - start);
      log.train.total += b.total * k;
      for (std::size_t i = 0; i < 3; ++i) log.train.classification[i] += b.classification[i] * k;
      for (std::size_t i = 0; i < kNumRegression; ++i) log.train.regression[i] += b.regression[i] * k;
      log.train.segments += end - start;
    }
    log.train.finish();

    log.val_loss = validation_loss(model, val_set, stats);
    schedule.observe(log.val_loss);
    Best cand{log.val_loss, to_checkpoint(model, stats, static_cast<std::uint32_t>(epoch),
                                          static_cast<float>(log.val_loss))};
    if (best.size() < 2 || log.val_loss < best.back().loss) {
      if (best.size() == 2) best.pop_back();
      const auto pos = std::find_if(best.begin(), best.end(),
                                    [&](const Best& b) { return log.val_loss < b.loss; });
      best.insert(pos, std::move(cand));
    }
    log.best_val_loss = best.front().loss;
    log_info("epoch ", epoch, " train ", log.train.total, " val ", log.val_loss, " lr ", log.lr);
    if (on_epoch) on_epoch(log);
    result.log.push_back(log);
  }

  result.checkpoint = best.size() == 2 ? nn::average_checkpoints(best[0].ckpt, best[1].ckpt)
                                       : best[0].ckpt;
  result.checkpoint.epoch = best[0].ckpt.epoch;
  XaneModel<float> averaged(cfg.model);
  load_weights(averaged, result.checkpoint);
  result.checkpoint.val_loss = static_cast<float>(validation_loss(averaged, val_set, stats));
  return result;
}

inline std::string log_csv_header() {
  std::string h = "epoch,lambda_c,lambda_r,train_loss,noise_ce,codec_ce,overlap_ce";
  for (auto n : kRegressionNames) h += str_cat(",", n, "_mse");
  return h + ",val_loss,lr";
}

inline std::string log_csv_row(const EpochLog& l) {
  std::ostringstream os;
  os.precision(9);
  os << l.epoch << ',' << l.weights.lambda_c << ',' << l.weights.lambda_r << ',' << l.train.total;
  for (double v : l.train.classification) os << ',' << v;
  for (double v : l.train.regression) os << ',' << v;
  os << ',' << l.val_loss << ',' << l.lr;
  return os.str();
}

inline void write_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UserError(str_cat("cannot write log ", path.string()));
  out << log_csv_header() << '\n';
  for (const auto& l : log) out << log_csv_row(l) << '\n';
}

}  // namespace xane
