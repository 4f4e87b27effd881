// tools/xane.cpp

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

// Command-line front end: RIR simulation, dataset synthesis, training,
// analysis, evaluation and clustering.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include "xane/config.hpp"
#include "xane/eval.hpp"
#include "xane/inference.hpp"
#include "xane/speechgen.hpp"
#include "xane/synth.hpp"
#include "xane/train.hpp"

namespace fs = std::filesystem;
using namespace xane;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  int verbose = 0;

  std::uint64_t seed_or(std::optional<std::uint64_t> config_seed) const {
    if (seed) return *seed;
    if (config_seed) return *config_seed;
    if (const char* env = std::getenv("XANE_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw UserError(str_cat("XANE_SEED is not an integer: '", env, "'"));
      }
    }
    return 1;
  }
};

Vec3 parse_vec3(const std::string& s, const char* what) {
  const auto cells = split_csv(s);
  if (cells.size() != 3) throw UserError(str_cat(what, " needs three comma-separated numbers"));
  Vec3 v;
  try {
    for (int i = 0; i < 3; ++i) v[i] = std::stod(cells[i]);
  } catch (const std::exception&) {
    throw UserError(str_cat(what, " needs three comma-separated numbers"));
  }
  return v;
}

std::string self_path() {
  std::error_code ec;
  const auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string("xane") : p.string();
}

// "{xane}" in codec command templates names this executable.
void expand_self(std::string& cmd) { detail::replace_all(cmd, "{xane}", self_path()); }

// ---------------------------------------------------------------------------

struct RirArgs {
  std::string dims, src, mic, out;
  double beta = 0.0;
  double c = 343.0;
  int max_order = -1;
  double length_s = -1.0;
};

int cmd_rir(const RirArgs& a) {
  RoomSpec spec;
  spec.dims = parse_vec3(a.dims, "--dims");
  spec.src = parse_vec3(a.src, "--src");
  spec.mic = parse_vec3(a.mic, "--mic");
  spec.beta = a.beta;
  spec.c = a.c;
  spec.max_order = a.max_order;
  spec.length_s = a.length_s;
  const Rir rir = simulate_rir(spec);
  write_rir(a.out, rir);
  const auto l = reverb_labels(rir);
  std::cout << std::setprecision(6) << "c50_db " << l.c50_db << "\nc5_db " << l.c5_db
            << "\nt60_ms " << l.t60_ms << "\ndrr_db " << l.drr_db << "\nvolume_m3 " << l.rvol_m3
            << "\nbeta " << l.refc << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config, out;
};

int cmd_synth(const SynthArgs& a, const Globals& g, const CLI::App& app) {
  SynthConfig cfg = load_synth_config(a.config);
  const auto table = config_detail::parse_file(a.config);
  cfg.seed = g.seed_or(table["seed"] ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
  if (app.count("--threads") > 0) cfg.threads = g.threads;
  if (!a.out.empty()) cfg.output_dir = a.out;
  for (auto& cmd : cfg.codec_commands) expand_self(cmd);
  fs::create_directories(cfg.output_dir);
  write_toml(to_toml(cfg), cfg.output_dir / "effective_config.toml");
  const auto s = build_dataset(cfg);
  std::cout << s.utterances << " utterances, " << s.groups << " groups (" << s.train << " train, "
            << s.val << " val)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, train, val, out, log, preset, feature_index;
  int epochs = 0;
  int batch_size = 0;
  double lr = 0.0;
};

int cmd_train(const TrainArgs& a, const Globals& g) {
  TrainRun run;
  std::optional<std::uint64_t> config_seed;
  if (!a.config.empty()) {
    run = load_train_run(a.config);
    if (config_detail::parse_file(a.config)["seed"]) config_seed = run.train.seed;
  }
  auto& c = run.train;
  if (!a.preset.empty()) {
    toml::table m{{"preset", a.preset}};
    c.model = model_config_from_toml(m);
  }
  if (!a.train.empty()) run.train_manifest = a.train;
  if (!a.val.empty()) run.val_manifest = a.val;
  if (!a.out.empty()) run.output = a.out;
  if (!a.log.empty()) run.log = a.log;
  if (!a.feature_index.empty()) c.feature_index = a.feature_index;
  if (a.epochs > 0) c.epochs = a.epochs;
  if (a.batch_size > 0) c.batch_size = static_cast<std::size_t>(a.batch_size);
  if (a.lr > 0.0) c.learning_rate = a.lr;
  c.seed = g.seed_or(config_seed);
  c.threads = g.threads;
  if (run.train_manifest.empty() || run.val_manifest.empty())
    throw UserError("training needs --train and --val manifests (or a config)");
  if (run.output.empty()) throw UserError("training needs --out (or output in the config)");
  if (run.log.empty()) run.log = fs::path(run.output.string() + ".log.csv");
  c.validate();
  write_toml(to_toml(run), fs::path(run.output.string() + ".effective.toml"));

  const auto train_entries = read_manifest(run.train_manifest);
  const auto val_entries = read_manifest(run.val_manifest);
  log_info("loading features for ", train_entries.size(), " + ", val_entries.size(), " utterances");
  const auto train_set = load_segments(train_entries, c.model, c.feature_index, c.threads);
  const auto val_set = load_segments(val_entries, c.model, c.feature_index, c.threads);
  const auto result = train(train_set, val_set, c);
  save_model(run.output, result.checkpoint, c.model, c.seed);
  write_log_csv(result.log, run.log);
  std::cout << "best epoch " << result.checkpoint.epoch << ", validation loss "
            << result.checkpoint.val_loss << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string model, embeddings, out;
  std::vector<std::string> files;
};

int cmd_analyze(const AnalyzeArgs& a, const Globals& g) {
  const auto m = load_model(a.model);
  struct Item {
    std::optional<UtteranceEstimate> est;
    double audio_s = 0.0, seconds = 0.0;
    std::string error;
  };
  std::vector<Item> items(a.files.size());
  parallel_for(a.files.size(), g.threads, [&](std::size_t i) {
    const fs::path p = a.files[i];
    try {
      std::vector<nn::Matrix<float>> inputs;
      if (p.extension() == ".xfea") {
        const auto t0 = std::chrono::steady_clock::now();
        inputs = feature_file_inputs(p, m.config);
        items[i].audio_s = static_cast<double>(inputs.size());
        items[i].est = infer_utterance(m.model, m.checkpoint.stats, inputs);
        items[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } else {
        const Waveform w = read_wav(p);
        const auto t0 = std::chrono::steady_clock::now();
        items[i].est = infer_utterance(m.model, m.checkpoint.stats, waveform_inputs(w, m.config));
        items[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        items[i].audio_s = w.duration_s();
      }
    } catch (const Error& e) {
      items[i].error = e.what();
    }
  });
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw UserError(str_cat("cannot write ", a.out));
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> emb;
  double audio = 0.0, seconds = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].est) {
      log_warn("skipping ", a.files[i], ": ", items[i].error);
      continue;
    }
    const std::string id = fs::path(a.files[i]).stem().string();
    out << to_json(*items[i].est, id).dump() << '\n';
    ids.push_back(id);
    emb.push_back(items[i].est->embedding);
    audio += items[i].audio_s;
    seconds += items[i].seconds;
  }
  if (!a.embeddings.empty()) write_embeddings_csv(a.embeddings, ids, emb);
  if (audio > 0.0) std::cerr << "RTF " << seconds / audio << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model, manifest, estimates, out, embeddings, feature_index;
  bool rtf = false;
};

UtteranceEstimate estimate_from_json(const nlohmann::json& j) {
  UtteranceEstimate u;
  try {
    for (std::size_t t = 0; t < kNumRegression; ++t)
      u.regression[t] = j.at(std::string(kRegressionNames[t])).get<double>();
    u.noise_type = noise_index(j.at("noise_type").get<std::string>());
    u.codec_type = codec_index(j.at("codec_type").get<std::string>());
    u.overlap = j.at("overlap").get<bool>() ? 1 : 0;
  } catch (const nlohmann::json::exception& e) {
    throw UserError(str_cat("estimate record does not match the schema: ", e.what()));
  }
  return u;
}

int cmd_eval(const EvalArgs& a, const Globals& g) {
  const auto entries = read_manifest(a.manifest);
  if (entries.empty()) throw UserError("manifest is empty");
  std::vector<UtteranceEstimate> est(entries.size());
  std::optional<LoadedModel> m;
  if (!a.estimates.empty()) {
    std::ifstream in(a.estimates);
    if (!in) throw UserError(str_cat("cannot open estimates ", a.estimates));
    std::map<std::string, UtteranceEstimate> by_id;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw UserError(str_cat(a.estimates, ":", n, ": ", e.what()));
      }
      if (!j.contains("id")) throw UserError(str_cat(a.estimates, ":", n, ": missing id"));
      by_id[j["id"].get<std::string>()] = estimate_from_json(j);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto it = by_id.find(entries[i].id);
      if (it == by_id.end()) throw UserError(str_cat("no estimate for ", entries[i].id));
      est[i] = it->second;
    }
  } else {
    if (a.model.empty()) throw UserError("eval needs --model or --estimates");
    m = load_model(a.model);
    std::map<std::string, fs::path> index;
    if (m->config.frontend == Frontend::kImported) index = read_feature_index(a.feature_index);
    parallel_for(entries.size(), g.threads, [&](std::size_t i) {
      const auto& e = entries[i];
      const auto inputs = m->config.frontend == Frontend::kMelFb
                              ? waveform_inputs(read_wav(e.degraded), m->config)
                              : feature_file_inputs(index.at(e.id), m->config);
      est[i] = infer_utterance(m->model, m->checkpoint.stats, inputs);
    });
  }
  std::vector<RegressionValues> est_r, truth_r;
  std::vector<ClassValues> est_c, truth_c;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    est_r.push_back(regression_estimate(est[i]));
    truth_r.push_back(utterance_truth(entries[i].labels));
    est_c.push_back(class_estimate(est[i]));
    truth_c.push_back(class_truth(entries[i].labels));
  }
  EvalReport r;
  r.utterances = entries.size();
  r.regression = regression_report(est_r, truth_r);
  r.f1 = classification_report(est_c, truth_c);
  if (a.rtf) {
    if (!m) throw UserError("--rtf needs --model");
    std::vector<Waveform> audio;
    for (const auto& e : entries) audio.push_back(read_wav(e.degraded));
    r.rtf = measure_rtf(m->model, m->checkpoint.stats, audio);
  }
  if (!a.embeddings.empty()) {
    std::vector<std::string> ids;
    std::vector<std::vector<float>> emb;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (est[i].embedding.empty()) throw UserError("embeddings need --model");
      ids.push_back(entries[i].id);
      emb.push_back(est[i].embedding);
    }
    write_embeddings_csv(a.embeddings, ids, emb);
  }
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw UserError(str_cat("cannot write ", a.out));
    out << to_json(r).dump(2) << '\n';
  }
  std::cout << format_table(r);
  return 0;
}

// ---------------------------------------------------------------------------

struct ClusterArgs {
  std::string embeddings, labels, manifest, by = "overlap", out;
  std::size_t k = 2;
  int restarts = 10;
};

int cmd_cluster(const ClusterArgs& a, const Globals& g) {
  const auto table = read_embeddings_csv(a.embeddings);
  std::map<std::string, std::string> labels;
  if (!a.labels.empty()) {
    labels = read_label_csv(a.labels);
  } else if (!a.manifest.empty()) {
    for (const auto& e : read_manifest(a.manifest)) {
      const auto& l = e.labels;
      if (a.by == "overlap")
        labels[e.id] = l.overlap ? "overlap" : "single";
      else if (a.by == "t60") {
        if (auto grp = t60_group(l.t60_ms)) labels[e.id] = *grp;
      } else if (a.by == "codec")
        labels[e.id] = std::string(kCodecTypes[l.codec_type]);
      else if (a.by == "noise")
        labels[e.id] = std::string(kNoiseTypes[l.noise_type]);
      else
        throw UserError(str_cat("unknown grouping '", a.by, "'"));
    }
  } else {
    throw UserError("cluster needs --labels or --manifest");
  }
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> truth;
  std::map<std::string, std::size_t> class_ids;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto it = labels.find(table.ids[i]);
    if (it == labels.end()) continue;
    x.push_back(table.values[i]);
    truth.push_back(class_ids.emplace(it->second, class_ids.size()).first->second);
  }
  const auto res = kmeans(x, a.k, g.seed_or(std::nullopt), a.restarts);
  const double f1 = cluster_f1(res.assignments, truth);
  nlohmann::json j{{"k", a.k}, {"n", x.size()}, {"inertia", res.inertia}, {"f1_percent", f1}};
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw UserError(str_cat("cannot write ", a.out));
    out << j.dump(2) << '\n';
  }
  std::cout << j.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct GenSpeechArgs {
  std::string out;
  int count = 10;
  double min_s = 2.0, max_s = 4.0;
};

int cmd_gen_speech(const GenSpeechArgs& a, const Globals& g) {
  if (a.count < 1) throw UserError("--count must be positive");
  if (!(a.min_s >= 1.0 && a.min_s <= a.max_s)) throw UserError("durations must satisfy 1 <= min <= max");
  fs::create_directories(a.out);
  std::mt19937_64 rng(g.seed_or(std::nullopt));
  for (int i = 0; i < a.count; ++i) {
    const Voice v = random_voice(rng);
    const double dur = std::uniform_real_distribution<double>(a.min_s, a.max_s)(rng);
    const auto seed = rng();
    std::ostringstream name;
    name << "speech_" << std::setw(4) << std::setfill('0') << i << ".wav";
    write_wav(fs::path(a.out) / name.str(), synth_speech(v, dur, seed), WavEncoding::kPcm16);
  }
  std::cout << a.count << " utterances written to " << a.out << '\n';
  return 0;
}

struct CodecStubArgs {
  std::string in, out, mode = "music";
  double bitrate = 32.0;
};

int cmd_codec_stub(const CodecStubArgs& a) {
  write_wav(a.out, codec_stub(read_wav(a.in), a.mode, a.bitrate));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xane: explainable background-acoustics embeddings"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (falls back to XANE_SEED)");
  app.add_option("--threads", g.threads, "Worker threads for data-parallel stages")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Log progress (repeat for more)");

  RirArgs rir;
  auto* c_rir = app.add_subcommand("rir", "Simulate a shoebox room impulse response");
  c_rir->add_option("--dims", rir.dims, "Room size Lx,Ly,Lz in metres")->required();
  c_rir->add_option("--beta", rir.beta, "Wall reflection coefficient")->required();
  c_rir->add_option("--src", rir.src, "Source position x,y,z")->required();
  c_rir->add_option("--mic", rir.mic, "Microphone position x,y,z")->required();
  c_rir->add_option("--c", rir.c, "Speed of sound (m/s)");
  c_rir->add_option("--max-order", rir.max_order, "Maximum reflection order");
  c_rir->add_option("--length", rir.length_s, "RIR length in seconds");
  c_rir->add_option("--out", rir.out, "Output wav (a .json sidecar is written next to it)")
      ->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Synthesize a labelled dataset");
  c_synth->add_option("--config", synth.config, "Synthesis config (TOML)")->required();
  c_synth->add_option("--out", synth.out, "Output directory (overrides the config)");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--config", tr.config, "Training config (TOML)");
  c_train->add_option("--train", tr.train, "Training manifest");
  c_train->add_option("--val", tr.val, "Validation manifest");
  c_train->add_option("--out", tr.out, "Output checkpoint");
  c_train->add_option("--log", tr.log, "Per-epoch CSV log");
  c_train->add_option("--preset", tr.preset, "melfb_transformer, imported_transformer or tiny");
  c_train->add_option("--feature-index", tr.feature_index, "Imported features (CSV id,path)");
  c_train->add_option("--epochs", tr.epochs, "Number of epochs");
  c_train->add_option("--batch-size", tr.batch_size, "Segments per batch");
  c_train->add_option("--lr", tr.lr, "Initial learning rate");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Estimate parameters and embeddings of audio files");
  c_an->add_option("--model", an.model, "Checkpoint")->required();
  c_an->add_option("--embeddings", an.embeddings, "Write utterance embeddings as CSV");
  c_an->add_option("--out", an.out, "Write JSON lines here instead of stdout");
  c_an->add_option("files", an.files, "Wav or feature files")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Score estimates against a manifest");
  c_ev->add_option("--model", ev.model, "Checkpoint");
  c_ev->add_option("--manifest", ev.manifest, "Manifest with ground truth")->required();
  c_ev->add_option("--estimates", ev.estimates, "Use estimates from analyze instead of a model");
  c_ev->add_option("--feature-index", ev.feature_index, "Imported features (CSV id,path)");
  c_ev->add_option("--out", ev.out, "Write the JSON report here");
  c_ev->add_option("--embeddings", ev.embeddings, "Write utterance embeddings as CSV");
  c_ev->add_flag("--rtf", ev.rtf, "Also measure the real-time factor");

  ClusterArgs cl;
  auto* c_cl = app.add_subcommand("cluster", "k-means clustering of utterance embeddings");
  c_cl->add_option("--embeddings", cl.embeddings, "Embeddings CSV")->required();
  c_cl->add_option("--labels", cl.labels, "Ground truth CSV id,label");
  c_cl->add_option("--manifest", cl.manifest, "Take ground truth from a manifest");
  c_cl->add_option("--by", cl.by, "Manifest grouping: overlap, t60, codec or noise");
  c_cl->add_option("--k", cl.k, "Number of clusters");
  c_cl->add_option("--restarts", cl.restarts, "k-means restarts");
  c_cl->add_option("--out", cl.out, "Write the JSON result here");

  GenSpeechArgs gs;
  auto* c_gs = app.add_subcommand("gen-speech", "Write procedurally synthesized speech");
  c_gs->add_option("--out", gs.out, "Output directory")->required();
  c_gs->add_option("--count", gs.count, "Number of utterances");
  c_gs->add_option("--min-duration", gs.min_s, "Shortest utterance (s)");
  c_gs->add_option("--max-duration", gs.max_s, "Longest utterance (s)");

  CodecStubArgs cs;
  auto* c_cs = app.add_subcommand("codec-stub", "");
  c_cs->group("");
  c_cs->add_option("--in", cs.in)->required();
  c_cs->add_option("--out", cs.out)->required();
  c_cs->add_option("--mode", cs.mode);
  c_cs->add_option("--bitrate", cs.bitrate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  log_level() = g.verbose;

  try {
    if (*c_rir) return cmd_rir(rir);
    if (*c_synth) return cmd_synth(synth, g, app);
    if (*c_train) return cmd_train(tr, g);
    if (*c_an) return cmd_analyze(an, g);
    if (*c_ev) return cmd_eval(ev, g);
    if (*c_cl) return cmd_cluster(cl, g);
    if (*c_gs) return cmd_gen_speech(gs, g);
    if (*c_cs) return cmd_codec_stub(cs);
  } catch (const UserError& e) {
    std::cerr << "ERROR " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "ERROR numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ERROR " << e.what() << '\n';
    return 1;
  }
  return 0;
}
