// swvae/pipeline.hpp

// Copyright 2026 the swvae authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// The four pipeline commands behind the CLI: synthesize a dataset, train the
// audio-only and audio-visual speech models, enhance every mixture, and score
// the results. Each command is a pure function of (config, input files):
// reruns are byte-reproducible.

#ifndef SWVAE_PIPELINE_HPP_
#define SWVAE_PIPELINE_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swvae/enhancer.hpp"
#include "swvae/errors.hpp"
#include "swvae/featio.hpp"
#include "swvae/manifest.hpp"
#include "swvae/metrics.hpp"
#include "swvae/run_config.hpp"
#include "swvae/signal.hpp"
#include "swvae/vae.hpp"
#include "swvae/wav.hpp"

namespace swvae {

namespace detail {

/// Index-keyed parallel loop. Work items must be independent; exceptions are
/// rethrown on the calling thread after all workers finish.
inline void parallel_for(std::size_t n, std::size_t jobs,
                         const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mx;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(jobs, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mx);
          if (!error) error = std::current_exception();
          break;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string utt_tag(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

inline std::string snr_tag(double snr_db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+g", snr_db);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("pipeline: cannot write " + path);
  out << text;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline void echo_config(const RunConfig& cfg, const std::string& dir) {
  write_json(dir + "/config.json", run_config_to_json(cfg));
}

inline const ManifestEntry& find_entry(
    const std::vector<ManifestEntry>& entries, const std::string& kind,
    std::size_t utterance, double snr_db = 0.0, bool match_snr = false) {
  for (const ManifestEntry& e : entries) {
    if (e.kind != kind || !e.has_utterance || e.utterance != utterance) {
      continue;
    }
    if (match_snr && (!e.has_snr() || e.snr_db != snr_db)) continue;
    return e;
  }
  throw DataError("manifest: no '" + kind + "' entry for utterance " +
                  std::to_string(utterance));
}

// Mirror `pad` samples of context onto each end (no edge repeat, clamped for
// signals shorter than the pad).  Overlap-add synthesis normalizes by the
// accumulated squared window, so the outermost samples of an unpadded signal
// have near-zero coverage and any spectral modification there is amplified by
// the reciprocal; padding moves that region into disposable context.
inline Waveform reflect_pad(const Waveform& w, std::size_t pad) {
  const std::size_t n = w.samples.size();
  if (n == 0) throw DataError("reflect_pad: empty signal");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    out.samples[i] = w.samples[std::min(n - 1, pad - i)];
    out.samples[pad + n + i] = w.samples[n - 1 - std::min(n - 1, i + 1)];
  }
  std::copy(w.samples.begin(), w.samples.end(), out.samples.begin() + pad);
  return out;
}

// Extend a visual sequence by replicating the first/last frame (values and
// occlusion flags), keeping it aligned with the frames of a padded mixture.
inline VisualSequence pad_visual(const VisualSequence& vis,
                                 std::size_t pad_frames) {
  const std::size_t t0 = vis.frames(), d = vis.dim();
  if (t0 == 0) throw DataError("pad_visual: empty sequence");
  VisualSequence out;
  out.values = RealMatrix(t0 + 2 * pad_frames, d);
  out.occluded.assign(t0 + 2 * pad_frames, 0);
  for (std::size_t t = 0; t < out.frames(); ++t) {
    const std::size_t src =
        t < pad_frames ? 0 : std::min(t0 - 1, t - pad_frames);
    std::copy(vis.values.row(src), vis.values.row(src) + d, out.values.row(t));
    out.occluded[t] = vis.occluded[src];
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// synth

/// Writes the synthetic corpus: per utterance a clean file, a noise file, one
/// mixture per SNR in the grid, clean and occluded visual sequences, and the
/// frame labels; plus the config echo and a checksummed manifest.
inline std::vector<ManifestEntry> cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  const std::string dir = cfg.data();
  std::filesystem::create_directories(dir);
  const Rng root(cfg.seed);
  const std::size_t n = cfg.synth.utterances;
  std::vector<std::vector<ManifestEntry>> per_utt(n);

  detail::parallel_for(n, cfg.jobs, [&](std::size_t i) {
    std::vector<ManifestEntry>& out = per_utt[i];
    const std::string tag = detail::utt_tag(i);
    Rng clean_rng = root.fork(i).fork(0);
    Rng noise_rng = root.fork(i).fork(1);
    Rng occ_rng = root.fork(i).fork(2);

    const SynthOutput sample =
        synth_clean(cfg.synth.regimes, cfg.synth.seconds, clean_rng, cfg.stft,
                    cfg.synth.visual_dim, cfg.synth.sample_rate);
    const Waveform noise =
        synth_noise(cfg.synth.seconds, noise_rng, cfg.synth.sample_rate);

    const std::string clean_rel = "clean_" + tag + ".wav";
    wav_write(dir + "/" + clean_rel, sample.wave, WavFormat::kFloat32);
    ManifestEntry e = make_entry(dir, clean_rel, "clean");
    e.utterance = i;
    e.has_utterance = true;
    out.push_back(e);

    const std::string noise_rel = "noise_" + tag + ".wav";
    wav_write(dir + "/" + noise_rel, noise, WavFormat::kFloat32);
    e = make_entry(dir, noise_rel, "noise");
    e.utterance = i;
    e.has_utterance = true;
    out.push_back(e);

    const std::string vis_rel = "visual_" + tag + ".swvf";
    save_visual(sample.visual, dir + "/" + vis_rel);
    e = make_entry(dir, vis_rel, "visual");
    e.utterance = i;
    e.has_utterance = true;
    out.push_back(e);

    const VisualSequence occluded = occlude(
        sample.visual, cfg.synth.occlusion_fraction, cfg.synth.occlusion_burst,
        occ_rng);
    const std::string occ_rel = "visual_" + tag + "_occluded.swvf";
    save_visual(occluded, dir + "/" + occ_rel);
    e = make_entry(dir, occ_rel, "visual_occluded");
    e.utterance = i;
    e.has_utterance = true;
    out.push_back(e);

    const std::string lab_rel = "labels_" + tag + ".swvl";
    save_labels(sample.labels, dir + "/" + lab_rel);
    e = make_entry(dir, lab_rel, "labels");
    e.utterance = i;
    e.has_utterance = true;
    out.push_back(e);

    for (double snr : cfg.synth.snr_grid) {
      const Waveform mix = mix_at_snr(sample.wave, noise, snr);
      const std::string mix_rel =
          "mix_" + tag + "_snr" + detail::snr_tag(snr) + ".wav";
      wav_write(dir + "/" + mix_rel, mix, WavFormat::kFloat32);
      e = make_entry(dir, mix_rel, "mixture");
      e.utterance = i;
      e.has_utterance = true;
      e.snr_db = snr;
      out.push_back(e);
    }
  });

  detail::echo_config(cfg, dir);
  std::vector<ManifestEntry> entries;
  entries.push_back(make_entry(dir, "config.json", "config"));
  for (const auto& chunk : per_utt) {
    entries.insert(entries.end(), chunk.begin(), chunk.end());
  }
  write_manifest(dir, entries);
  return entries;
}

// ---------------------------------------------------------------------------
// train-vae

struct TrainOutput {
  std::vector<double> a_losses, av_losses;
  std::string a_path, av_path;
};

/// Trains the audio-only and audio-visual models on the clean corpus frames
/// and writes checkpoints, metadata sidecars, and the loss curves.
inline TrainOutput cmd_train_vae(const RunConfig& cfg) {
  cfg.validate();
  const std::string data_dir = cfg.data();
  const std::string model_dir = cfg.models();
  std::filesystem::create_directories(model_dir);
  const std::vector<ManifestEntry> manifest = read_manifest(data_dir);

  // Collect utterance ids in manifest order.
  std::vector<std::size_t> utts;
  for (const ManifestEntry& e : manifest) {
    if (e.kind == "clean" && e.has_utterance) utts.push_back(e.utterance);
  }
  if (utts.empty()) throw DataError("train: no clean files in manifest");

  std::vector<RealVector> powers;
  std::vector<RealVector> visual_rows;
  for (std::size_t u : utts) {
    const ManifestEntry& ce = detail::find_entry(manifest, "clean", u);
    const ManifestEntry& ve = detail::find_entry(manifest, "visual", u);
    const Waveform wave = wav_read(data_dir + "/" + ce.path);
    const ComplexSpectrogram spec = stft(wave, cfg.stft);
    const VisualSequence vis = load_visual(data_dir + "/" + ve.path);
    if (vis.frames() != spec.frames()) {
      throw DataError("train: visual/spectrogram frame mismatch for " +
                      ce.path);
    }
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      powers.push_back(frame_power(spec, t));
      visual_rows.emplace_back(vis.values.row(t),
                               vis.values.row(t) + vis.dim());
    }
  }
  RealMatrix visual(visual_rows.size(), cfg.synth.visual_dim);
  for (std::size_t t = 0; t < visual_rows.size(); ++t) {
    std::copy(visual_rows[t].begin(), visual_rows[t].end(), visual.row(t));
  }

  // Floor every bin at a fraction of the corpus mean power so the decoders
  // cannot fit near-zero variances in bins the clean corpus leaves empty.
  if (cfg.vae.power_floor > 0.0) {
    double mean_power = 0.0;
    std::size_t count = 0;
    for (const RealVector& p : powers) {
      for (double v : p) mean_power += v;
      count += p.size();
    }
    if (count > 0) mean_power /= static_cast<double>(count);
    const double floor = cfg.vae.power_floor * mean_power;
    for (RealVector& p : powers) {
      for (double& v : p) v += floor;
    }
  }

  const std::size_t bins = cfg.stft.bins();
  VaeTrainConfig tc;
  tc.epochs = cfg.vae.epochs;
  tc.batch = cfg.vae.batch;
  tc.learning_rate = cfg.vae.learning_rate;
  const Rng root(cfg.seed);

  TrainOutput out;
  out.a_path = model_dir + "/a_vae.swvm";
  out.av_path = model_dir + "/av_vae.swvm";

  Rng a_init = root.fork(11);
  VaeModel a = make_vae(VaeKind::kAudioOnly, bins, cfg.vae.latent_dim, 0,
                        cfg.vae.hidden_dim, a_init, 0);
  Rng a_train = root.fork(12);
  out.a_losses = train_vae(a, powers, nullptr, tc, a_train);
  save_vae(a, out.a_path);

  Rng av_init = root.fork(13);
  VaeModel av =
      make_vae(VaeKind::kAudioVisual, bins, cfg.vae.latent_dim,
               cfg.synth.visual_dim, cfg.vae.hidden_dim, av_init, 1);
  Rng av_train = root.fork(14);
  out.av_losses = train_vae(av, powers, &visual, tc, av_train);
  save_vae(av, out.av_path);

  const auto meta = [&](const VaeModel& m, const std::vector<double>& losses) {
    nlohmann::json j;
    j["kind"] = m.audio_visual() ? "audio-visual" : "audio-only";
    j["model_id"] = m.model_id;
    j["latent_dim"] = m.latent_dim;
    j["hidden_dim"] = cfg.vae.hidden_dim;
    j["bins"] = m.bins;
    j["visual_dim"] = m.visual_dim;
    j["epochs"] = cfg.vae.epochs;
    j["frames"] = powers.size();
    j["seed"] = cfg.seed;
    j["final_loss"] = losses.back();
    return j;
  };
  detail::write_json(model_dir + "/a_vae.meta.json", meta(a, out.a_losses));
  detail::write_json(model_dir + "/av_vae.meta.json", meta(av, out.av_losses));
  nlohmann::json log;
  log["a_vae"] = out.a_losses;
  log["av_vae"] = out.av_losses;
  detail::write_json(model_dir + "/training_log.json", log);
  detail::echo_config(cfg, model_dir);

  std::vector<ManifestEntry> entries;
  entries.push_back(make_entry(model_dir, "config.json", "config"));
  entries.push_back(make_entry(model_dir, "a_vae.swvm", "checkpoint"));
  entries.push_back(make_entry(model_dir, "av_vae.swvm", "checkpoint"));
  entries.push_back(make_entry(model_dir, "a_vae.meta.json", "metadata"));
  entries.push_back(make_entry(model_dir, "av_vae.meta.json", "metadata"));
  entries.push_back(make_entry(model_dir, "training_log.json", "log"));
  write_manifest(model_dir, entries);
  return out;
}

// ---------------------------------------------------------------------------
// enhance

struct EnhanceRun {
  std::size_t utterance = 0;
  double snr_db = 0.0;
  std::string visual;  // "clean" or "occluded"
  std::string wav_rel, diag_rel;
};

/// Loads the two checkpoints and runs the variational EM enhancer on every
/// mixture under every configured visual condition. Writes one enhanced WAV
/// and one JSONL diagnostics file per run.
inline std::vector<EnhanceRun> cmd_enhance(const RunConfig& cfg) {
  cfg.validate();
  const std::string data_dir = cfg.data();
  const std::string model_dir = cfg.models();
  const std::string out_dir = cfg.enhanced();
  std::filesystem::create_directories(out_dir);

  for (const char* name : {"a_vae.swvm", "av_vae.swvm"}) {
    const std::string path = model_dir + "/" + name;
    if (!std::filesystem::exists(path)) {
      throw DataError("enhance: checkpoint not found: " + path);
    }
  }
  std::vector<VaeModel> bank;
  bank.push_back(load_vae(model_dir + "/a_vae.swvm"));
  bank.push_back(load_vae(model_dir + "/av_vae.swvm"));

  const std::vector<ManifestEntry> manifest = read_manifest(data_dir);
  std::vector<EnhanceRun> runs;
  {
    std::size_t snr_index = 0;
    for (const ManifestEntry& e : manifest) {
      if (e.kind != "mixture") continue;
      for (std::size_t c = 0; c < cfg.visual_conditions.size(); ++c) {
        EnhanceRun r;
        r.utterance = e.utterance;
        r.snr_db = e.snr_db;
        r.visual = cfg.visual_conditions[c];
        const std::string stem = "enh_" + detail::utt_tag(e.utterance) +
                                 "_snr" + detail::snr_tag(e.snr_db) + "_vis-" +
                                 r.visual;
        r.wav_rel = stem + ".wav";
        r.diag_rel = "diag_" + detail::utt_tag(e.utterance) + "_snr" +
                     detail::snr_tag(e.snr_db) + "_vis-" + r.visual + ".jsonl";
        runs.push_back(std::move(r));
      }
      ++snr_index;
    }
  }
  if (runs.empty()) throw DataError("enhance: no mixtures in manifest");

  std::vector<std::vector<ManifestEntry>> per_run(runs.size());
  detail::parallel_for(runs.size(), cfg.jobs, [&](std::size_t k) {
    const EnhanceRun& r = runs[k];
    const ManifestEntry& me =
        detail::find_entry(manifest, "mixture", r.utterance, r.snr_db, true);
    const std::string vis_kind =
        r.visual == "occluded" ? "visual_occluded" : "visual";
    const ManifestEntry& ve =
        detail::find_entry(manifest, vis_kind, r.utterance);

    const Waveform mix = wav_read(data_dir + "/" + me.path);
    const VisualSequence vis = load_visual(data_dir + "/" + ve.path);
    // A whole number of hops covering one window on each side: every real
    // sample keeps full overlap-add coverage and padded frames map onto
    // visual frames by a constant offset.
    const std::size_t pad_frames =
        (cfg.stft.window + cfg.stft.hop - 1) / cfg.stft.hop;
    const std::size_t pad = pad_frames * cfg.stft.hop;
    const ComplexSpectrogram spec =
        stft(detail::reflect_pad(mix, pad), cfg.stft);
    if (vis.frames() + 2 * pad_frames != spec.frames()) {
      throw DataError("enhance: visual/spectrogram frame mismatch for " +
                      me.path);
    }
    const VisualSequence vis_padded = detail::pad_visual(vis, pad_frames);

    EnhancerConfig ec = cfg.enhancer;
    // One independent, reproducible stream per (utterance, snr, condition).
    std::uint64_t tag = detail::mix_seed(cfg.seed, r.utterance);
    tag = detail::mix_seed(tag, static_cast<std::uint64_t>(
                                    static_cast<std::int64_t>(r.snr_db * 16)));
    tag = detail::mix_seed(tag, r.visual == "occluded" ? 2 : 1);
    ec.seed = tag;

    const EnhanceResult res = enhance(spec, &vis_padded, bank, ec);
    const Waveform full = istft(res.enhanced);
    Waveform enhanced;
    enhanced.sample_rate = mix.sample_rate;
    enhanced.samples.assign(full.samples.begin() + pad,
                            full.samples.begin() + pad + mix.samples.size());
    wav_write(out_dir + "/" + r.wav_rel, enhanced, WavFormat::kFloat32);

    std::string diag;
    for (const EmIterationDiag& d : res.iterations) {
      nlohmann::json j;
      j["iteration"] = d.iteration;
      j["bound"] = d.bound;
      j["mean_r"] = d.mean_r;
      j["nmf_divergence"] = d.nmf_divergence;
      diag += j.dump() + "\n";
    }
    {
      nlohmann::json j;
      j["final"] = true;
      j["lambda"] = res.hmm.lambda;
      j["tau"] = nlohmann::json::array();
      for (std::size_t s = 0; s < res.hmm.states(); ++s) {
        j["tau"].push_back(std::vector<double>(
            res.hmm.tau.row(s), res.hmm.tau.row(s) + res.hmm.states()));
      }
      // Only the rows aligned with real mixture frames; the pad context is
      // an implementation detail of the synthesis.
      j["responsibilities"] = nlohmann::json::array();
      for (std::size_t t = pad_frames; t < pad_frames + vis.frames(); ++t) {
        j["responsibilities"].push_back(std::vector<double>(
            res.responsibilities.row(t),
            res.responsibilities.row(t) + res.responsibilities.cols()));
      }
      diag += j.dump() + "\n";
    }
    detail::write_text(out_dir + "/" + r.diag_rel, diag);

    ManifestEntry e = make_entry(out_dir, r.wav_rel, "enhanced");
    e.utterance = r.utterance;
    e.has_utterance = true;
    e.snr_db = r.snr_db;
    e.visual = r.visual;
    per_run[k].push_back(e);
    e = make_entry(out_dir, r.diag_rel, "diagnostics");
    e.utterance = r.utterance;
    e.has_utterance = true;
    e.snr_db = r.snr_db;
    e.visual = r.visual;
    per_run[k].push_back(e);
  });

  detail::echo_config(cfg, out_dir);
  std::vector<ManifestEntry> entries;
  entries.push_back(make_entry(out_dir, "config.json", "config"));
  for (const auto& chunk : per_run) {
    entries.insert(entries.end(), chunk.begin(), chunk.end());
  }
  write_manifest(out_dir, entries);
  return runs;
}

// ---------------------------------------------------------------------------
// eval

namespace detail {

inline RealMatrix responsibilities_from_diag(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("eval: cannot open " + path);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(last);
    const auto& rows = j.at("responsibilities");
    RealMatrix r(rows.size(), rows.empty() ? 0 : rows.at(0).size());
    for (std::size_t t = 0; t < r.rows(); ++t) {
      for (std::size_t m = 0; m < r.cols(); ++m) {
        r(t, m) = rows.at(t).at(m).get<double>();
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("eval: malformed diagnostics in " + path + ": " +
                    e.what());
  }
}

inline std::string grid_line(const std::string& name,
                             const std::vector<double>& values) {
  char buf[64];
  std::string line = "  ";
  line += name;
  line.resize(12, ' ');
  for (double v : values) {
    std::snprintf(buf, sizeof buf, " | %7.2f", v);
    line += buf;
  }
  return line + "\n";
}

}  // namespace detail

/// Scores every enhanced run against its clean reference and writes
/// report.json (per-run values and per-condition means) plus an aligned
/// plain-text grid of SNR columns by method rows.
inline nlohmann::json cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  const std::string data_dir = cfg.data();
  const std::string enh_dir = cfg.enhanced();
  const std::string rep_dir = cfg.report();
  std::filesystem::create_directories(rep_dir);
  const std::vector<ManifestEntry> data_manifest = read_manifest(data_dir);
  const std::vector<ManifestEntry> enh_manifest = read_manifest(enh_dir);

  struct RunScore {
    EvalReport report;
    std::size_t utterance;
  };
  // Grouped by (visual condition, snr), insertion-ordered by first sight.
  std::vector<std::pair<std::string, double>> group_keys;
  std::map<std::pair<std::string, double>, std::vector<RunScore>> groups;
  nlohmann::json runs_json = nlohmann::json::array();

  for (const ManifestEntry& e : enh_manifest) {
    if (e.kind != "enhanced") continue;
    const ManifestEntry& ce =
        detail::find_entry(data_manifest, "clean", e.utterance);
    const ManifestEntry& me = detail::find_entry(data_manifest, "mixture",
                                                 e.utterance, e.snr_db, true);
    const ManifestEntry& le =
        detail::find_entry(data_manifest, "labels", e.utterance);
    ManifestEntry diag = e;
    diag.kind = "diagnostics";
    // Locate the diagnostics entry for the same run.
    const ManifestEntry* de = nullptr;
    for (const ManifestEntry& d : enh_manifest) {
      if (d.kind == "diagnostics" && d.utterance == e.utterance &&
          d.has_snr() && d.snr_db == e.snr_db && d.visual == e.visual) {
        de = &d;
        break;
      }
    }
    if (de == nullptr) {
      throw DataError("eval: missing diagnostics for " + e.path);
    }

    const Waveform clean = wav_read(data_dir + "/" + ce.path);
    const Waveform mix = wav_read(data_dir + "/" + me.path);
    const Waveform enh = wav_read(enh_dir + "/" + e.path);
    const std::vector<int> labels = load_labels(data_dir + "/" + le.path);
    const RealMatrix resp =
        detail::responsibilities_from_diag(enh_dir + "/" + de->path);

    EvalCondition cond;
    cond.noise = "ar1";
    cond.snr_db = e.snr_db;
    cond.occluded = e.visual == "occluded";
    const EvalReport rep = evaluate_run(clean, mix, enh, labels, resp, cond);

    nlohmann::json rj;
    rj["utterance"] = e.utterance;
    rj["snr_db"] = e.snr_db;
    rj["visual"] = e.visual;
    rj["sdr_db"] = rep.sdr_db;
    rj["seg_snr_db"] = rep.seg_snr_db;
    rj["switch_accuracy"] = rep.switch_accuracy;
    rj["input_sdr_db"] = rep.input_sdr_db;
    rj["input_seg_snr_db"] = rep.input_seg_snr_db;
    runs_json.push_back(rj);

    const std::pair<std::string, double> key{e.visual, e.snr_db};
    if (groups.find(key) == groups.end()) group_keys.push_back(key);
    groups[key].push_back({rep, e.utterance});
  }
  if (runs_json.empty()) throw DataError("eval: no enhanced runs to score");

  nlohmann::json aggregates = nlohmann::json::array();
  for (const auto& key : group_keys) {
    std::vector<EvalReport> reports;
    for (const RunScore& s : groups.at(key)) reports.push_back(s.report);
    const EvalReport mean = mean_report(reports);
    nlohmann::json aj;
    aj["visual"] = key.first;
    aj["snr_db"] = key.second;
    aj["utterances"] = reports.size();
    aj["sdr_db"] = mean.sdr_db;
    aj["seg_snr_db"] = mean.seg_snr_db;
    aj["switch_accuracy"] = mean.switch_accuracy;
    aj["input_sdr_db"] = mean.input_sdr_db;
    aj["input_seg_snr_db"] = mean.input_seg_snr_db;
    aggregates.push_back(aj);
  }

  nlohmann::json report;
  report["runs"] = runs_json;
  report["aggregates"] = aggregates;
  detail::write_json(rep_dir + "/report.json", report);

  // Aligned grid: one block per visual condition, SNR columns, method rows.
  std::vector<std::string> conditions;
  for (const auto& key : group_keys) {
    if (std::find(conditions.begin(), conditions.end(), key.first) ==
        conditions.end()) {
      conditions.push_back(key.first);
    }
  }
  std::string text;
  for (const std::string& c : conditions) {
    std::vector<double> snrs;
    for (const auto& key : group_keys) {
      if (key.first == c) snrs.push_back(key.second);
    }
    std::sort(snrs.begin(), snrs.end());
    text += "== visual: " + c + " ==\n";
    std::string header = "  method    ";
    char buf[64];
    for (double s : snrs) {
      std::snprintf(buf, sizeof buf, " | %4g dB ", s);
      header += buf;
    }
    const auto collect = [&](const auto& field) {
      std::vector<double> row;
      for (double s : snrs) {
        std::vector<EvalReport> reports;
        for (const RunScore& sc : groups.at({c, s})) {
          reports.push_back(sc.report);
        }
        row.push_back(field(mean_report(reports)));
      }
      return row;
    };
    text += "SDR (dB)\n" + header + "\n";
    text += detail::grid_line(
        "input", collect([](const EvalReport& r) { return r.input_sdr_db; }));
    text += detail::grid_line(
        "enhanced", collect([](const EvalReport& r) { return r.sdr_db; }));
    text += "segmental SNR (dB)\n" + header + "\n";
    text += detail::grid_line(
        "input",
        collect([](const EvalReport& r) { return r.input_seg_snr_db; }));
    text += detail::grid_line(
        "enhanced", collect([](const EvalReport& r) { return r.seg_snr_db; }));
    text += "switch accuracy\n" + header + "\n";
    text += detail::grid_line("enhanced", collect([](const EvalReport& r) {
                                return r.switch_accuracy;
                              }));
    text += "\n";
  }
  detail::write_text(rep_dir + "/report.txt", text);
  detail::echo_config(cfg, rep_dir);
  return report;
}

}  // namespace swvae

#endif  // SWVAE_PIPELINE_HPP_
