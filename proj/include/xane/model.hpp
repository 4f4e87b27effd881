// include/xane/model.hpp

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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "xane/common.hpp"
#include "xane/nn/checkpoint.hpp"
#include "xane/nn/encoder.hpp"
#include "xane/nn/layers.hpp"
#include "xane/nn/loss.hpp"

namespace xane {

enum class Frontend { kMelFb, kImported };
enum class EncoderKind { kTransformer, kConformer };
enum class PoolingKind { kMean, kAttention };

inline constexpr std::size_t kEmbeddingDim = 128;
inline constexpr std::size_t kNumRegression = nn::kNumRegressionTasks;
inline constexpr std::size_t kNoiseClasses = 5;
inline constexpr std::size_t kCodecClasses = 3;
inline constexpr std::size_t kOverlapClasses = 2;
inline constexpr std::size_t kHeadOutputs =
    kNumRegression + kNoiseClasses + kCodecClasses + kOverlapClasses;
inline constexpr double kVadGate = 0.2;  // 200 ms of speech per 1 s segment

/// Order of the 11 regression outputs.
enum RegressionTask : std::size_t {
  kC50 = 0, kT60, kDrr, kC5, kRvol, kRefc, kPesq, kEstoi, kBitrate, kSnr, kVad
};

inline constexpr std::array<std::string_view, kNumRegression> kRegressionNames{
    "c50_db", "t60_ms", "drr_db", "c5_db", "rvol_m3", "refc",
    "pesq", "estoi", "bitrate_kbps", "snr_db", "vad"};

struct ModelConfig {
  Frontend frontend = Frontend::kMelFb;
  EncoderKind encoder = EncoderKind::kTransformer;
  std::size_t encoder_layers = 2;
  std::size_t model_dim = 256;
  std::size_t heads = 8;
  std::size_t ffn_dim = 256;
  std::size_t embedding_dim = kEmbeddingDim;
  std::size_t conv_kernel = 2;
  std::array<std::size_t, 2> conv_strides{2, 2};
  std::size_t conformer_kernel = 15;
  bool positional_encoding = true;
  PoolingKind pooling = PoolingKind::kMean;
  double dropout = 0.1;

  std::size_t input_dim() const { return frontend == Frontend::kMelFb ? 80 : 768; }
  std::size_t input_frames() const { return frontend == Frontend::kMelFb ? 100 : 50; }
  double hop_ms() const { return frontend == Frontend::kMelFb ? 10.0 : 20.0; }

  std::size_t encoder_frames() const {
    std::size_t t = input_frames();
    for (auto s : conv_strides) t = (t + s - 1) / s;
    return t;
  }

  void validate() const {
    if (embedding_dim != kEmbeddingDim)
      throw UserError(str_cat("embedding_dim must be ", kEmbeddingDim));
    if (heads == 0 || model_dim % heads != 0)
      throw UserError(str_cat("model_dim ", model_dim, " not divisible by heads ", heads));
    if (model_dim < 2 || ffn_dim == 0 || conv_kernel == 0 || conv_strides[0] == 0 ||
        conv_strides[1] == 0 || conformer_kernel == 0)
      throw UserError("invalid model dimensions");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UserError("dropout outside [0, 1)");
  }

  static ModelConfig melfb_transformer() { return {}; }

  static ModelConfig imported_transformer() {
    ModelConfig c;
    c.frontend = Frontend::kImported;
    c.model_dim = 128;
    c.conv_strides = {2, 1};
    return c;
  }

  /// Desk-scale configuration used for quick training runs.
  static ModelConfig tiny() {
    ModelConfig c;
    c.model_dim = 64;
    c.heads = 4;
    c.ffn_dim = 128;
    return c;
  }
};

inline std::string to_string(Frontend f) { return f == Frontend::kMelFb ? "melfb" : "imported"; }
inline std::string to_string(EncoderKind e) {
  return e == EncoderKind::kTransformer ? "transformer" : "conformer";
}
inline std::string to_string(PoolingKind p) { return p == PoolingKind::kMean ? "mean" : "attention"; }

inline Frontend parse_frontend(std::string_view s) {
  if (s == "melfb") return Frontend::kMelFb;
  if (s == "imported" || s == "wavlm") return Frontend::kImported;
  throw UserError(str_cat("unknown frontend '", s, "'"));
}
inline EncoderKind parse_encoder(std::string_view s) {
  if (s == "transformer") return EncoderKind::kTransformer;
  if (s == "conformer") return EncoderKind::kConformer;
  throw UserError(str_cat("unknown encoder '", s, "'"));
}
inline PoolingKind parse_pooling(std::string_view s) {
  if (s == "mean") return PoolingKind::kMean;
  if (s == "attention") return PoolingKind::kAttention;
  throw UserError(str_cat("unknown pooling '", s, "'"));
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"frontend", to_string(c.frontend)},
          {"encoder", to_string(c.encoder)},
          {"encoder_layers", c.encoder_layers},
          {"model_dim", c.model_dim},
          {"heads", c.heads},
          {"ffn_dim", c.ffn_dim},
          {"embedding_dim", c.embedding_dim},
          {"conv_kernel", c.conv_kernel},
          {"conv_strides", {c.conv_strides[0], c.conv_strides[1]}},
          {"conformer_kernel", c.conformer_kernel},
          {"positional_encoding", c.positional_encoding},
          {"pooling", to_string(c.pooling)},
          {"dropout", c.dropout}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.frontend = parse_frontend(j.at("frontend").get<std::string>());
    c.encoder = parse_encoder(j.at("encoder").get<std::string>());
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.model_dim = j.at("model_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
    c.conv_strides = {j.at("conv_strides").at(0).get<std::size_t>(),
                      j.at("conv_strides").at(1).get<std::size_t>()};
    c.conformer_kernel = j.at("conformer_kernel").get<std::size_t>();
    c.positional_encoding = j.at("positional_encoding").get<bool>();
    c.pooling = parse_pooling(j.at("pooling").get<std::string>());
    c.dropout = j.at("dropout").get<double>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UserError(str_cat("bad model config: ", e.what()));
  }
}

/// Raw network outputs for one segment; regression is in normalized space.
struct TaskOutputs {
  std::array<double, kNumRegression> regression{};
  std::array<double, kNoiseClasses> noise_logits{};
  std::array<double, kCodecClasses> codec_logits{};
  std::array<double, kOverlapClasses> overlap_logits{};

  static TaskOutputs from_heads(std::span<const double> h) {
    if (h.size() != kHeadOutputs) throw Error("TaskOutputs: wrong head size");
    TaskOutputs o;
    std::size_t i = 0;
    for (auto& v : o.regression) v = h[i++];
    for (auto& v : o.noise_logits) v = h[i++];
    for (auto& v : o.codec_logits) v = h[i++];
    for (auto& v : o.overlap_logits) v = h[i++];
    return o;
  }
};

/// The XANE network: two strided Conv1d layers, an encoder stack, temporal
/// pooling, a 128-unit GELU embedding layer and a 21-unit output layer
/// (11 regression, then 5 / 3 / 2 classification logits).
template <typename T>
class XaneModel {
 public:
  using Matrix = nn::Matrix<T>;

  struct Cache {
    Matrix input, conv1_pre, conv1_act, conv2_pre, encoder_in;
    std::vector<typename nn::TransformerLayer<T>::Cache> transformer;
    std::vector<typename nn::ConformerLayer<T>::Cache> conformer;
    std::vector<Matrix> layer_in;
    typename nn::LayerNorm<T>::Cache final_norm;
    Matrix encoder_out;
    typename nn::AttentionPool<T>::Cache pool;
    Matrix pooled, embed_pre, embedding;
  };

  struct Output {
    Matrix embedding;  // 1 x 128
    Matrix heads;      // 1 x 21
  };

  XaneModel() : XaneModel(ModelConfig{}) {}

  explicit XaneModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg.model_dim;
    conv1_ = nn::Conv1d<T>("frontend.conv1", cfg.input_dim(), d, cfg.conv_kernel,
                           cfg.conv_strides[0]);
    conv2_ = nn::Conv1d<T>("frontend.conv2", d, d, cfg.conv_kernel, cfg.conv_strides[1]);
    for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
      const std::string name = str_cat("encoder.", l);
      if (cfg.encoder == EncoderKind::kTransformer)
        transformer_.emplace_back(name, d, cfg.heads, cfg.ffn_dim, cfg.dropout);
      else
        conformer_.emplace_back(name, d, cfg.heads, cfg.ffn_dim, cfg.conformer_kernel,
                                cfg.dropout);
    }
    if (cfg.encoder == EncoderKind::kTransformer)
      final_norm_ = nn::LayerNorm<T>("encoder.final_norm", d);
    if (cfg.pooling == PoolingKind::kAttention)
      pool_ = nn::AttentionPool<T>("pool", d);
    embed_ = nn::Linear<T>("embedding", d, cfg.embedding_dim);
    head_ = nn::Linear<T>("head", cfg.embedding_dim, kHeadOutputs);
  }

  const ModelConfig& config() const { return cfg_; }

  /// Deterministic Xavier-uniform initialization (norm layers: ones/zeros).
  void init(std::uint64_t seed) {
    nn::Rng rng(seed);
    conv1_.init(rng);
    conv2_.init(rng);
    for (auto& l : transformer_) l.init(rng);
    for (auto& l : conformer_) l.init(rng);
    if (has_final_norm()) final_norm_.init(rng);
    if (cfg_.pooling == PoolingKind::kAttention) pool_.init(rng);
    embed_.init(rng);
    head_.init(rng);
  }

  template <typename F>
  void visit(F&& f) {
    conv1_.visit(f);
    conv2_.visit(f);
    for (auto& l : transformer_) l.visit(f);
    for (auto& l : conformer_) l.visit(f);
    if (has_final_norm()) final_norm_.visit(f);
    if (cfg_.pooling == PoolingKind::kAttention) pool_.visit(f);
    embed_.visit(f);
    head_.visit(f);
  }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    visit([&](nn::Parameter<T>& p) { out.push_back(&p); });
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    visit([&](nn::Parameter<T>& p) { n += p.size(); });
    return n;
  }

  void zero_grad() {
    visit([](nn::Parameter<T>& p) { p.zero_grad(); });
  }

  nn::Linear<T>& head() { return head_; }
  nn::Linear<T>& embedding_layer() { return embed_; }

  /// Forward pass over one segment. `dropout_rng` enables dropout (training).
  Output forward(const Matrix& x, Cache& c, nn::Rng* dropout_rng = nullptr) const {
    if (x.rows() != cfg_.input_frames() || x.cols() != cfg_.input_dim())
      throw UserError(str_cat("segment must be ", cfg_.input_frames(), "x", cfg_.input_dim(),
                              " frames, got ", x.rows(), "x", x.cols()));
    c.input = x;
    c.conv1_pre = conv1_.forward(x);
    c.conv1_act = nn::activate(c.conv1_pre, nn::Activation::kGelu);
    c.conv2_pre = conv2_.forward(c.conv1_act);
    c.encoder_in = nn::activate(c.conv2_pre, nn::Activation::kGelu);
    Matrix h = cfg_.positional_encoding ? nn::add_positional_encoding(c.encoder_in)
                                        : c.encoder_in;
    c.layer_in.clear();
    c.transformer.assign(transformer_.size(), {});
    c.conformer.assign(conformer_.size(), {});
    for (std::size_t l = 0; l < transformer_.size(); ++l) {
      c.layer_in.push_back(h);
      h = transformer_[l].forward(h, c.transformer[l], dropout_rng);
    }
    for (std::size_t l = 0; l < conformer_.size(); ++l) {
      c.layer_in.push_back(h);
      h = conformer_[l].forward(h, c.conformer[l], dropout_rng);
    }
    c.encoder_out = has_final_norm() ? final_norm_.forward(h, c.final_norm) : h;
    c.pooled = cfg_.pooling == PoolingKind::kMean ? nn::mean_pool(c.encoder_out)
                                                  : pool_.forward(c.encoder_out, c.pool);
    c.embed_pre = embed_.forward(c.pooled);
    c.embedding = nn::activate(c.embed_pre, nn::Activation::kGelu);
    return {c.embedding, head_.forward(c.embedding)};
  }

  Output forward(const Matrix& x) const {
    Cache c;
    return forward(x, c, nullptr);
  }

  /// Back-propagates dL/d(head outputs) and accumulates parameter gradients.
  void backward(const Matrix& d_heads, const Cache& c) {
    Matrix g = head_.backward(c.embedding, d_heads);
    g = nn::activate_backward(c.embed_pre, g, nn::Activation::kGelu);
    g = embed_.backward(c.pooled, g);
    g = cfg_.pooling == PoolingKind::kMean ? nn::mean_pool_backward(g, c.encoder_out.rows())
                                           : pool_.backward(g, c.pool);
    if (has_final_norm()) g = final_norm_.backward(g, c.final_norm);
    for (std::size_t l = conformer_.size(); l-- > 0;) g = conformer_[l].backward(g, c.conformer[l]);
    for (std::size_t l = transformer_.size(); l-- > 0;)
      g = transformer_[l].backward(g, c.transformer[l]);
    // The position encoding is an additive constant.
    g = nn::activate_backward(c.conv2_pre, g, nn::Activation::kGelu);
    g = conv2_.backward(c.conv1_act, g);
    g = nn::activate_backward(c.conv1_pre, g, nn::Activation::kGelu);
    conv1_.backward(c.input, g);
  }

 private:
  bool has_final_norm() const { return cfg_.encoder == EncoderKind::kTransformer; }

  ModelConfig cfg_;
  nn::Conv1d<T> conv1_, conv2_;
  std::vector<nn::TransformerLayer<T>> transformer_;
  std::vector<nn::ConformerLayer<T>> conformer_;
  nn::LayerNorm<T> final_norm_;
  nn::AttentionPool<T> pool_;
  nn::Linear<T> embed_, head_;
};

template <typename T>
std::vector<double> head_values(const typename XaneModel<T>::Output& out) {
  return {out.heads.data().begin(), out.heads.data().end()};
}

// ---------------------------------------------------------------------------
// Targets, normalization and the multi-task loss.

using TargetStats = std::array<nn::TaskStats, kNumRegression>;

inline double normalize_target(double y, const nn::TaskStats& s) { return (y - s.mean) / s.sd; }
inline double denormalize_target(double z, const nn::TaskStats& s) { return z * s.sd + s.mean; }

/// Per-segment training targets. Regression values are z-scored.
struct SegmentTargets {
  std::array<double, kNumRegression> regression{};
  std::array<bool, kNumRegression> present{};
  std::size_t noise = 0;
  std::size_t codec = 0;
  std::size_t overlap = 0;
  double vad_fraction = 1.0;
};

struct LossSchedule {
  double lambda_c = 1.0;
  double lambda_r = 0.0;
  bool operator==(const LossSchedule&) const = default;
};

/// Classification only for the first two epochs, then both with lambda_c
/// lowered to 0.3.
inline LossSchedule loss_weights(int epoch) {
  if (epoch < 0) throw Error("loss_weights: negative epoch");
  return epoch < 2 ? LossSchedule{1.0, 0.0} : LossSchedule{0.3, 1.0};
}

struct SegmentLoss {
  double total = 0.0;
  std::array<double, 3> classification{};           // weighted: noise, codec, overlap
  std::array<double, kNumRegression> regression{};  // weighted per task
  std::vector<double> head_grad;                    // d total / d heads
  bool gated = false;                               // < 200 ms of speech
};

/// L = lambda_c * mean(three cross entropies) + lambda_r * masked MSE over the
/// 11 regression targets. Segments with vad_fraction < 0.2 keep only the VAD
/// regression term.
inline SegmentLoss segment_loss(std::span<const double> heads, const SegmentTargets& y,
                                const LossSchedule& w) {
  if (heads.size() != kHeadOutputs) throw Error("segment_loss: wrong head size");
  SegmentLoss out;
  out.head_grad.assign(kHeadOutputs, 0.0);
  out.gated = y.vad_fraction < kVadGate;

  std::vector<bool> mask(kNumRegression);
  for (std::size_t i = 0; i < kNumRegression; ++i)
    mask[i] = y.present[i] && (!out.gated || i == kVad);
  const auto mse = nn::masked_mse(heads.first(kNumRegression), y.regression, mask);
  for (std::size_t i = 0; i < kNumRegression; ++i) {
    out.regression[i] = w.lambda_r * mse.per_element[i];
    out.head_grad[i] = w.lambda_r * mse.grad[i];
  }
  out.total = w.lambda_r * mse.loss;

  if (!out.gated) {
    const std::array<std::pair<std::size_t, std::size_t>, 3> blocks{
        {{kNumRegression, kNoiseClasses},
         {kNumRegression + kNoiseClasses, kCodecClasses},
         {kNumRegression + kNoiseClasses + kCodecClasses, kOverlapClasses}}};
    const std::array<std::size_t, 3> targets{y.noise, y.codec, y.overlap};
    for (std::size_t b = 0; b < 3; ++b) {
      const auto ce = nn::softmax_ce(heads.subspan(blocks[b].first, blocks[b].second), targets[b]);
      out.classification[b] = w.lambda_c * ce.loss / 3.0;
      out.total += out.classification[b];
      for (std::size_t k = 0; k < blocks[b].second; ++k)
        out.head_grad[blocks[b].first + k] = w.lambda_c * ce.grad[k] / 3.0;
    }
  }
  return out;
}

struct BatchLoss {
  double total = 0.0;
  std::array<double, 3> classification{};
  std::array<double, kNumRegression> regression{};
  std::size_t segments = 0;

  void add(const SegmentLoss& l) {
    total += l.total;
    for (std::size_t i = 0; i < 3; ++i) classification[i] += l.classification[i];
    for (std::size_t i = 0; i < kNumRegression; ++i) regression[i] += l.regression[i];
    ++segments;
  }
  void finish() {
    if (segments == 0) return;
    const double inv = 1.0 / static_cast<double>(segments);
    total *= inv;
    for (auto& v : classification) v *= inv;
    for (auto& v : regression) v *= inv;
  }
};

/// Exact gradients of the batch-mean loss, accumulated into the parameters'
/// grad buffers (which are zeroed first). Returns the batch-mean loss.
template <typename T>
BatchLoss accumulate_gradients(XaneModel<T>& model,
                               std::span<const nn::Matrix<T>* const> inputs,
                               std::span<const SegmentTargets> targets,
                               const LossSchedule& weights, nn::Rng* dropout_rng = nullptr,
                               double loss_scale = 1.0) {
  if (inputs.size() != targets.size()) throw Error("accumulate_gradients: size mismatch");
  model.zero_grad();
  BatchLoss batch;
  const double scale = loss_scale / static_cast<double>(std::max<std::size_t>(inputs.size(), 1));
  typename XaneModel<T>::Cache cache;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto out = model.forward(*inputs[i], cache, dropout_rng);
    const std::vector<double> heads(out.heads.data().begin(), out.heads.data().end());
    const SegmentLoss l = segment_loss(heads, targets[i], weights);
    if (!std::isfinite(l.total))
      throw NumericError(str_cat("non-finite loss on segment ", i, " of batch"));
    batch.add(l);
    nn::Matrix<T> d(1, kHeadOutputs);
    for (std::size_t k = 0; k < kHeadOutputs; ++k) d(0, k) = static_cast<T>(l.head_grad[k] * scale);
    model.backward(d, cache);
  }
  batch.finish();
  batch.total *= loss_scale;
  return batch;
}

// ---------------------------------------------------------------------------
// Checkpoint conversion.

template <typename T>
nn::Checkpoint to_checkpoint(XaneModel<T>& model, const TargetStats& stats,
                             std::uint32_t epoch = 0, float val_loss = 0.0f) {
  nn::Checkpoint c;
  model.visit([&](nn::Parameter<T>& p) {
    nn::NamedTensor t{p.name, p.shape, {}};
    t.data.reserve(p.size());
    for (auto v : p.value) t.data.push_back(static_cast<float>(v));
    c.tensors.push_back(std::move(t));
  });
  c.stats = stats;
  c.epoch = epoch;
  c.val_loss = val_loss;
  return c;
}

template <typename T>
void load_weights(XaneModel<T>& model, const nn::Checkpoint& c) {
  std::size_t matched = 0;
  model.visit([&](nn::Parameter<T>& p) {
    const auto* t = c.find(p.name);
    if (t == nullptr) throw UserError(str_cat("checkpoint lacks tensor ", p.name));
    if (t->shape != p.shape) throw UserError(str_cat("checkpoint shape mismatch for ", p.name));
    for (std::size_t i = 0; i < p.size(); ++i) p.value[i] = static_cast<T>(t->data[i]);
    ++matched;
  });
  if (matched != c.tensors.size())
    throw UserError("checkpoint has tensors the model does not use");
}

/// Model config lives next to the checkpoint as <checkpoint>.json.
inline std::filesystem::path config_sidecar(const std::filesystem::path& ckpt) {
  auto p = ckpt;
  p += ".json";
  return p;
}

inline void save_model(const std::filesystem::path& path, const nn::Checkpoint& c,
                       const ModelConfig& cfg, std::uint64_t seed) {
  nn::save_checkpoint(c, path);
  std::ofstream out(config_sidecar(path));
  nlohmann::json j{{"model", to_json(cfg)}, {"seed", seed}};
  out << j.dump(2) << '\n';
}

struct LoadedModel {
  ModelConfig config;
  nn::Checkpoint checkpoint;
  XaneModel<float> model;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(config_sidecar(path));
  if (!in) throw UserError(str_cat("missing model config ", config_sidecar(path).string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UserError(str_cat("bad model config: ", e.what()));
  }
  LoadedModel m{model_config_from_json(j.at("model")), nn::load_checkpoint(path), {}};
  m.model = XaneModel<float>(m.config);
  load_weights(m.model, m.checkpoint);
  return m;
}

}  // namespace xane
