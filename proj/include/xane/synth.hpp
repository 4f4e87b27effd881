// include/xane/synth.hpp

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

#include <sys/wait.h>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "xane/audio.hpp"
#include "xane/estoi.hpp"
#include "xane/labels.hpp"
#include "xane/metrics.hpp"
#include "xane/rir.hpp"

namespace xane {

// ---------------------------------------------------------------------------
// Codec stage.

struct CodecSpec {
  std::size_t codec_type = 0;  // index into kCodecTypes
  std::optional<double> bitrate_kbps;
  std::string command;  // template with {in} {out} {bitrate}

  void validate() const {
    if (codec_type >= kCodecClasses) throw UserError("codec type out of range");
    if ((codec_type != 0) != bitrate_kbps.has_value())
      throw UserError("bitrate must be set exactly for compressed codecs");
  }
};

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::string expand_codec_command(const CodecSpec& codec, const std::filesystem::path& in,
                                        const std::filesystem::path& out) {
  std::string cmd = codec.command;
  detail::replace_all(cmd, "{in}", detail::shell_quote(in.string()));
  detail::replace_all(cmd, "{out}", detail::shell_quote(out.string()));
  detail::replace_all(cmd, "{bitrate}",
                      str_cat(static_cast<long>(std::lround(codec.bitrate_kbps.value_or(0.0)))));
  return cmd;
}

inline constexpr std::size_t kCodecLengthTolerance = kSampleRate / 10;  // 100 ms

/// Round trip through an external encoder/decoder command. The result is
/// trimmed or zero-padded to the input length. `workdir` must be private to
/// the caller.
inline Waveform apply_codec(const Waveform& w, const CodecSpec& codec,
                            const std::filesystem::path& workdir) {
  codec.validate();
  if (codec.codec_type == 0) return w;
  if (codec.command.empty())
    throw UserError(str_cat("no command configured for codec ", kCodecTypes[codec.codec_type]));
  std::filesystem::create_directories(workdir);
  const auto in = workdir / "codec_in.wav";
  const auto out = workdir / "codec_out.wav";
  const auto err = workdir / "codec_stderr.txt";
  std::filesystem::remove(out);
  write_wav(in, w);
  const std::string cmd =
      expand_codec_command(codec, in, out) + " >/dev/null 2>" + detail::shell_quote(err.string());
  const int status = std::system(cmd.c_str());
  const int code = status == -1 ? -1 : (WIFEXITED(status) ? WEXITSTATUS(status) : 128);
  if (code != 0)
    throw Error(str_cat("codec command failed (exit ", code, "): ", codec.command, "\n",
                        detail::read_text(err)));
  Waveform r = read_wav(out);
  const std::size_t diff = r.size() > w.size() ? r.size() - w.size() : w.size() - r.size();
  if (diff > kCodecLengthTolerance)
    throw Error(str_cat("codec output length ", r.size(), " deviates from input ", w.size(),
                        " by more than 100 ms"));
  r.samples.resize(w.size(), 0.0);
  std::filesystem::remove(in);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

/// Stand-in for a lossy codec: zero-phase lowpass and requantization whose
/// strength depends on the mode and bitrate. Deterministic.
inline Waveform codec_stub(const Waveform& w, std::string_view mode, double bitrate_kbps) {
  if (!(bitrate_kbps > 0.0)) throw UserError("codec-stub: bitrate must be positive");
  double cutoff = 0.0;
  double bits = 0.0;
  if (mode == "music") {
    cutoff = std::clamp(200.0 * bitrate_kbps, 3000.0, 7500.0);
    bits = 8.0 + bitrate_kbps / 8.0;
  } else if (mode == "speech") {
    cutoff = std::clamp(100.0 * bitrate_kbps, 2500.0, 4000.0);
    bits = 5.0 + bitrate_kbps / 16.0;
  } else {
    throw UserError(str_cat("codec-stub: unknown mode '", mode, "'"));
  }
  constexpr int kHalf = 64;
  std::vector<double> h(2 * kHalf + 1);
  const double fc = cutoff / kSampleRate;
  for (int n = -kHalf; n <= kHalf; ++n) {
    const double sinc = n == 0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * n) / (kPi * n);
    const double win = 0.5 + 0.5 * std::cos(kPi * n / (kHalf + 1));
    h[static_cast<std::size_t>(n + kHalf)] = sinc * win;
  }
  // Delay the input so the truncated convolution is centred.
  std::vector<double> x(w.samples);
  x.resize(w.size() + kHalf, 0.0);
  const auto y = convolve(x, h);
  // Quantize relative to the peak so quiet inputs keep their content.
  double peak = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) peak = std::max(peak, std::abs(y[i + kHalf]));
  Waveform out;
  out.samples.resize(w.size());
  if (peak == 0.0) return out;
  const double step = peak * std::pow(2.0, -(std::floor(bits) - 1.0));
  for (std::size_t i = 0; i < w.size(); ++i)
    out.samples[i] = std::round(y[i + kHalf] / step) * step;
  return out;
}

// ---------------------------------------------------------------------------
// One utterance.

/// Loops `noise` from `offset` until `length` samples are filled.
inline Waveform loop_to_length(const Waveform& noise, std::size_t length, std::size_t offset) {
  if (noise.empty()) throw UserError("empty noise signal");
  Waveform out;
  out.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i)
    out.samples[i] = noise.samples[(offset + i) % noise.size()];
  return out;
}

inline Waveform white_noise(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Waveform out;
  out.samples.resize(length);
  for (auto& v : out.samples) v = g(rng);
  return out;
}

struct ReverbLabels {
  double c50_db = 0.0, c5_db = 0.0, t60_ms = 0.0, drr_db = 0.0, rvol_m3 = 0.0, refc = 0.0;
};

/// Reverberation labels of an RIR. An RIR with a single non-zero sample
/// (anechoic) has T60 = 0.
inline ReverbLabels reverb_labels(const Rir& rir) {
  ReverbLabels l;
  l.c50_db = clarity(rir, 50.0);
  l.c5_db = clarity(rir, 5.0);
  l.drr_db = drr(rir);
  l.rvol_m3 = rir.spec.volume();
  l.refc = rir.spec.beta;
  const auto nonzero = std::count_if(rir.samples.begin(), rir.samples.end(),
                                     [](double v) { return v != 0.0; });
  if (nonzero > 1) {
    try {
      l.t60_ms = t60_from_edc(edc(rir));
    } catch (const Error& e) {
      throw Error(str_cat("degenerate RIR: ", e.what()));
    }
  }
  return l;
}

struct SynthParams {
  RoomSpec room;
  Vec3 interferer_src{};          // used only with an overlap source
  std::optional<double> snr_db;   // absent: no additive noise
  double sir_db = 6.0;
  double peak_dbfs = -3.0;
  CodecSpec codec;
  std::size_t noise_type = 4;
  std::optional<double> pesq;
};

struct SynthResult {
  Waveform degraded;
  AcousticLabels labels;
  Rir rir;
};

/// Degrades `clean` and derives its labels from the exact components.
/// Order: reverb, overlap at SIR, noise at SNR, codec, peak level.
/// `noise` and `overlap` must be at least as long as `clean`.
inline SynthResult synth_utterance(const Waveform& clean, const Waveform* overlap,
                                   const Waveform* noise, const SynthParams& p,
                                   const std::filesystem::path& workdir) {
  const auto segments = segment_1s(clean);
  const auto vad = energy_vad(clean);
  bool active = false;
  for (const auto& s : segments) active |= vad_fraction(vad, s) >= kVadGate;
  if (!active) throw UserError("clean utterance has no segment with enough speech");

  SynthResult r;
  r.rir = simulate_rir(p.room);
  Waveform signal = convolve(clean, r.rir);
  if (overlap) {
    RoomSpec other = p.room;
    other.src = p.interferer_src;
    if (overlap->size() < clean.size()) throw Error("overlap source shorter than target");
    Waveform interferer;
    interferer.samples.assign(overlap->samples.begin(),
                              overlap->samples.begin() + static_cast<std::ptrdiff_t>(clean.size()));
    signal = mix_at_snr(signal, convolve(interferer, simulate_rir(other)), p.sir_db).mixed;
  }
  Waveform mixed = signal;
  Waveform scaled_noise;
  scaled_noise.samples.assign(clean.size(), 0.0);
  if (p.snr_db) {
    if (!noise) throw Error("synth_utterance: SNR given without noise");
    auto m = mix_at_snr(signal, *noise, *p.snr_db);
    mixed = std::move(m.mixed);
    scaled_noise = std::move(m.scaled_noise);
  }
  r.degraded = apply_peak_dbfs(apply_codec(mixed, p.codec, workdir), p.peak_dbfs);

  auto& l = r.labels;
  const auto rev = reverb_labels(r.rir);
  l.c50_db = rev.c50_db;
  l.c5_db = rev.c5_db;
  l.t60_ms = rev.t60_ms;
  l.drr_db = rev.drr_db;
  l.rvol_m3 = rev.rvol_m3;
  l.refc = rev.refc;
  l.estoi = estoi(clean, r.degraded);
  l.pesq = p.pesq;
  l.bitrate_kbps = p.codec.bitrate_kbps;
  l.noise_type = p.noise_type;
  l.codec_type = p.codec.codec_type;
  l.overlap = overlap != nullptr;
  for (const auto& s : segments) {
    SegmentLabels sl;
    sl.start_ms = static_cast<double>(s.start_sample) * 1000.0 / kSampleRate;
    sl.vad = vad_fraction(vad, s);
    sl.snr_db = segment_snr(signal, scaled_noise, s);
    l.segments.push_back(sl);
  }
  return r;
}

inline nlohmann::json to_json(const RoomSpec& s) {
  return {{"dims", s.dims},
          {"beta", s.beta},
          {"src", s.src},
          {"mic", s.mic},
          {"c", s.c},
          {"max_order", effective_max_order(s)},
          {"length_s", effective_length_s(s)}};
}

inline RoomSpec room_spec_from_json(const nlohmann::json& j) {
  RoomSpec s;
  s.dims = j.at("dims").get<Vec3>();
  s.beta = j.at("beta").get<double>();
  s.src = j.at("src").get<Vec3>();
  s.mic = j.at("mic").get<Vec3>();
  s.c = j.value("c", 343.0);
  s.max_order = j.value("max_order", -1);
  s.length_s = j.value("length_s", -1.0);
  return s;
}

/// "<rir>.json" next to an RIR wav.
inline std::filesystem::path rir_sidecar(const std::filesystem::path& wav) {
  auto p = wav;
  return p.replace_extension(".json");
}

inline void write_rir(const std::filesystem::path& wav, const Rir& rir) {
  Waveform w;
  w.samples = rir.samples;
  write_wav(wav, w);
  std::ofstream out(rir_sidecar(wav));
  if (!out) throw UserError(str_cat("cannot write ", rir_sidecar(wav).string()));
  nlohmann::json j{{"room", to_json(rir.spec)}, {"direct_index", rir.direct_index}};
  out << j.dump(2) << '\n';
}

inline RoomSpec read_rir_spec(const std::filesystem::path& wav) {
  std::ifstream in(rir_sidecar(wav));
  if (!in) throw UserError(str_cat("missing RIR sidecar ", rir_sidecar(wav).string()));
  return room_spec_from_json(nlohmann::json::parse(in).at("room"));
}

// ---------------------------------------------------------------------------
// Dataset builder.

struct Range {
  double lo = 0.0, hi = 0.0;
};

struct SynthConfig {
  std::vector<std::filesystem::path> clean_dirs;
  std::filesystem::path noise_root;
  std::vector<std::string> noise_types{kNoiseTypes.begin(), kNoiseTypes.end()};
  // Utterances per group, indexed [codec type][overlap].
  std::array<std::array<std::size_t, 2>, kCodecClasses> counts{};
  Range snr_db{0.0, 30.0};
  Range sir_db{3.0, 12.0};
  Range level_dbfs{-10.0, -0.1};
  Range beta{0.0, 0.95};
  Range bitrate_kbps{8.0, 64.0};
  Vec3 room_min{3.0, 3.0, 2.5};
  Vec3 room_max{10.0, 8.0, 4.0};
  double wall_margin = 0.5;
  double min_distance = 0.5;
  std::array<std::string, kCodecClasses> codec_commands{};
  double val_ratio = 0.05;
  std::filesystem::path pesq_csv;
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  int threads = 1;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : counts) n += c[0] + c[1];
    return n;
  }

  void validate() const {
    const auto ordered = [](const Range& r, const char* name) {
      if (!(r.lo <= r.hi)) throw UserError(str_cat(name, " range is not ordered"));
    };
    ordered(snr_db, "snr_db");
    ordered(sir_db, "sir_db");
    ordered(level_dbfs, "level_dbfs");
    ordered(beta, "beta");
    ordered(bitrate_kbps, "bitrate_kbps");
    if (beta.lo < 0.0 || beta.hi >= 1.0) throw UserError("beta range must lie in [0, 1)");
    if (bitrate_kbps.lo <= 0.0) throw UserError("bitrate range must be positive");
    if (level_dbfs.hi > 0.0) throw UserError("level range must be at most 0 dBFS");
    for (int a = 0; a < 3; ++a) {
      if (!(room_min[a] <= room_max[a])) throw UserError("room size range is not ordered");
      if (!(room_min[a] > 2.0 * wall_margin))
        throw UserError("smallest room leaves no space inside the wall margin");
    }
    if (!(val_ratio >= 0.0 && val_ratio < 1.0)) throw UserError("val_ratio must lie in [0, 1)");
    if (noise_types.empty()) throw UserError("no noise types requested");
    for (const auto& t : noise_types) noise_index(t);
    if (clean_dirs.empty()) throw UserError("no clean speech directories given");
    if (output_dir.empty()) throw UserError("no output directory given");
    for (std::size_t c = 1; c < kCodecClasses; ++c)
      if (counts[c][0] + counts[c][1] > 0 && codec_commands[c].empty())
        throw UserError(str_cat("no command configured for codec ", kCodecTypes[c]));
  }
};

inline std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw UserError(str_cat("directory not found: ", dir.string()));
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::map<std::string, double> read_pesq_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError(str_cat("cannot open PESQ file ", path.string()));
  std::map<std::string, double> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw UserError(str_cat(path.string(), ":", n, ": expected id,pesq"));
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      if (n == 1) continue;  // header
      throw UserError(str_cat(path.string(), ":", n, ": bad PESQ value"));
    }
  }
  return out;
}

struct DatasetSummary {
  std::size_t utterances = 0;
  std::size_t groups = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::filesystem::path manifest, train_manifest, val_manifest;
};

namespace detail {

struct UtterancePlan {
  std::string id;
  std::size_t clean = 0;
  std::optional<std::size_t> overlap;
  std::size_t noise_type = 0;
  std::optional<std::size_t> noise_file;  // absent: procedural white noise
  std::uint64_t noise_seed = 0;
  SynthParams params;
};

inline Vec3 random_point(const Vec3& dims, double margin, std::mt19937_64& rng) {
  Vec3 p;
  for (int a = 0; a < 3; ++a)
    p[a] = std::uniform_real_distribution<double>(margin, dims[a] - margin)(rng);
  return p;
}

inline double uniform(const Range& r, std::mt19937_64& rng) {
  return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace detail

/// Synthesizes the configured groups into output_dir: audio/, rir/,
/// manifest.jsonl and its train/val split. Utterances are planned
/// sequentially from the seed and rendered in parallel, so the output does
/// not depend on the thread count.
inline DatasetSummary build_dataset(const SynthConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::vector<fs::path> clean_files;
  for (const auto& d : cfg.clean_dirs) {
    const auto files = list_wavs(d);
    clean_files.insert(clean_files.end(), files.begin(), files.end());
  }
  if (clean_files.empty()) throw UserError("clean speech corpus is empty");
  bool want_overlap = false;
  for (const auto& c : cfg.counts) want_overlap |= c[1] > 0;
  if (want_overlap && clean_files.size() < 2)
    throw UserError("overlap groups need at least two clean utterances");

  // Noise corpus: noise_root/<type>/*.wav, white may be procedural.
  std::vector<std::size_t> types;
  std::vector<std::vector<Waveform>> noise(kNoiseClasses);
  for (const auto& name : cfg.noise_types) {
    const std::size_t t = noise_index(name);
    types.push_back(t);
    const fs::path dir = cfg.noise_root / name;
    if (!cfg.noise_root.empty() && fs::is_directory(dir)) {
      for (const auto& f : list_wavs(dir)) noise[t].push_back(read_wav(f));
      if (noise[t].empty() && name != "white")
        throw UserError(str_cat("noise directory for type '", name, "' is empty"));
    } else if (name != "white") {
      throw UserError(str_cat("missing noise directory for type '", name, "': ", dir.string()));
    }
  }
  std::map<std::string, double> pesq;
  if (!cfg.pesq_csv.empty()) pesq = read_pesq_csv(cfg.pesq_csv);

  std::mt19937_64 rng(cfg.seed);
  std::vector<detail::UtterancePlan> plans;
  std::size_t groups = 0;
  for (std::size_t c = 0; c < kCodecClasses; ++c) {
    for (std::size_t o = 0; o < 2; ++o) {
      if (cfg.counts[c][o] > 0) ++groups;
      for (std::size_t k = 0; k < cfg.counts[c][o]; ++k) {
        detail::UtterancePlan u;
        std::ostringstream id;
        id << "utt" << std::setw(6) << std::setfill('0') << plans.size();
        u.id = id.str();
        u.clean = std::uniform_int_distribution<std::size_t>(0, clean_files.size() - 1)(rng);
        if (o == 1) {
          std::size_t other = std::uniform_int_distribution<std::size_t>(0, clean_files.size() - 2)(rng);
          if (other >= u.clean) ++other;
          u.overlap = other;
        }
        u.noise_type = types[std::uniform_int_distribution<std::size_t>(0, types.size() - 1)(rng)];
        if (!noise[u.noise_type].empty())
          u.noise_file = std::uniform_int_distribution<std::size_t>(0, noise[u.noise_type].size() - 1)(rng);
        u.noise_seed = rng();
        auto& p = u.params;
        for (int a = 0; a < 3; ++a)
          p.room.dims[a] = detail::uniform({cfg.room_min[a], cfg.room_max[a]}, rng);
        p.room.beta = detail::uniform(cfg.beta, rng);
        for (int tries = 0;; ++tries) {
          p.room.src = detail::random_point(p.room.dims, cfg.wall_margin, rng);
          p.room.mic = detail::random_point(p.room.dims, cfg.wall_margin, rng);
          p.interferer_src = detail::random_point(p.room.dims, cfg.wall_margin, rng);
          if (distance(p.room.src, p.room.mic) >= cfg.min_distance &&
              distance(p.interferer_src, p.room.mic) >= cfg.min_distance)
            break;
          if (tries > 1000) throw UserError("cannot place source and microphone; room too small");
        }
        p.snr_db = detail::uniform(cfg.snr_db, rng);
        p.sir_db = detail::uniform(cfg.sir_db, rng);
        p.peak_dbfs = detail::uniform(cfg.level_dbfs, rng);
        p.codec.codec_type = c;
        p.codec.command = cfg.codec_commands[c];
        if (c != 0) p.codec.bitrate_kbps = std::round(detail::uniform(cfg.bitrate_kbps, rng));
        p.noise_type = u.noise_type;
        if (auto it = pesq.find(u.id); it != pesq.end()) p.pesq = it->second;
        plans.push_back(std::move(u));
      }
    }
  }
  const std::size_t noise_offset_seed = rng();

  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "audio");
  fs::create_directories(out / "rir");
  std::vector<ManifestEntry> entries(plans.size());
  parallel_for(plans.size(), cfg.threads, [&](std::size_t i) {
    const auto& u = plans[i];
    const Waveform clean = read_wav(clean_files[u.clean]);
    std::optional<Waveform> ov;
    if (u.overlap) ov = loop_to_length(read_wav(clean_files[*u.overlap]), clean.size(), 0);
    Waveform nz;
    if (u.noise_file) {
      const auto& src = noise[u.noise_type][*u.noise_file];
      std::mt19937_64 r(noise_offset_seed ^ u.noise_seed);
      nz = loop_to_length(src, clean.size(),
                          std::uniform_int_distribution<std::size_t>(0, src.size() - 1)(r));
    } else {
      nz = white_noise(clean.size(), u.noise_seed);
    }
    SynthResult r;
    try {
      r = synth_utterance(clean, ov ? &*ov : nullptr, &nz, u.params, out / "tmp" / u.id);
    } catch (const Error& e) {
      throw UserError(str_cat(u.id, " (", clean_files[u.clean].string(), "): ", e.what()));
    }
    write_wav(out / "audio" / (u.id + ".wav"), r.degraded);
    write_rir(out / "rir" / (u.id + ".wav"), r.rir);
    ManifestEntry& e = entries[i];
    e.id = u.id;
    e.degraded = "audio/" + u.id + ".wav";
    e.clean = fs::absolute(clean_files[u.clean]).lexically_normal().string();
    e.rir = "rir/" + u.id + ".wav";
    e.group_codec = std::string(kCodecTypes[u.params.codec.codec_type]);
    e.group_overlap = u.overlap.has_value();
    e.labels = std::move(r.labels);
  });
  fs::remove_all(out / "tmp");

  // Utterance-level validation split from a seeded permutation.
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_ratio * static_cast<double>(entries.size())));
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[std::uniform_int_distribution<std::size_t>(0, i - 1)(split_rng)]);
  std::vector<bool> is_val(entries.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  std::vector<ManifestEntry> train, val;
  for (std::size_t i = 0; i < entries.size(); ++i) (is_val[i] ? val : train).push_back(entries[i]);

  DatasetSummary s;
  s.utterances = entries.size();
  s.groups = groups;
  s.train = train.size();
  s.val = val.size();
  s.manifest = out / "manifest.jsonl";
  s.train_manifest = out / "train.jsonl";
  s.val_manifest = out / "val.jsonl";
  write_manifest(entries, s.manifest);
  write_manifest(train, s.train_manifest);
  write_manifest(val, s.val_manifest);
  return s;
}

}  // namespace xane
