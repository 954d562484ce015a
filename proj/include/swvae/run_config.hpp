// swvae/run_config.hpp

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

// Run configuration for the command-line pipeline: one JSON document with
// full defaulting, strict unknown-key rejection, and a deterministic echo of
// the resolved values for provenance.

#ifndef SWVAE_RUN_CONFIG_HPP_
#define SWVAE_RUN_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swvae/enhancer.hpp"
#include "swvae/errors.hpp"
#include "swvae/signal.hpp"
#include "swvae/vae.hpp"

namespace swvae {

struct SynthConfig {
  std::size_t utterances = 20;
  double seconds = 2.0;
  double sample_rate = 16000.0;
  int regimes = 2;
  std::size_t visual_dim = 8;
  std::vector<double> snr_grid = {-5.0, 0.0, 5.0, 10.0, 15.0};
  double occlusion_fraction = 1.0 / 3.0;
  std::size_t occlusion_burst = 20;
};

struct VaeArchConfig {
  std::size_t latent_dim = 16;
  std::size_t hidden_dim = 128;
  int epochs = 30;
  std::size_t batch = 64;
  double learning_rate = 1e-3;
  // Fraction of the mean training-bin power added to every bin before
  // fitting.  Keeps decoder variances away from zero in bins the clean
  // corpus leaves empty; without it the Gaussian likelihood is so peaked
  // there that responsibilities and Wiener gains become unstable on noisy
  // input.
  double power_floor = 0.02;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_root = "runs/out";
  std::size_t jobs = 1;
  StftConfig stft;
  SynthConfig synth;
  VaeArchConfig vae;
  EnhancerConfig enhancer;
  std::vector<std::string> visual_conditions = {"clean", "occluded"};
  // Empty entries resolve against out_root.
  std::string data_dir, models_dir, enhanced_dir, report_dir;

  std::string data() const { return resolve(data_dir, "data"); }
  std::string models() const { return resolve(models_dir, "models"); }
  std::string enhanced() const { return resolve(enhanced_dir, "enhanced"); }
  std::string report() const { return resolve(report_dir, "report"); }

  void validate() const {
    if (out_root.empty()) throw ConfigError("config: out_root must be set");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
    if (stft.window == 0 || stft.hop == 0 || stft.hop > stft.window) {
      throw ConfigError("config: stft window/hop out of range");
    }
    if (synth.utterances < 1) {
      throw ConfigError("config: synth.utterances must be >= 1");
    }
    if (synth.seconds <= 0.0 || synth.sample_rate <= 0.0) {
      throw ConfigError("config: synth duration and rate must be positive");
    }
    if (synth.regimes < 1) throw ConfigError("config: synth.regimes must be >= 1");
    if (synth.visual_dim < 1) {
      throw ConfigError("config: synth.visual_dim must be >= 1");
    }
    if (synth.snr_grid.empty()) throw ConfigError("config: empty snr grid");
    if (synth.occlusion_fraction < 0.0 || synth.occlusion_fraction > 1.0) {
      throw ConfigError("config: occlusion fraction must be in [0, 1]");
    }
    if (synth.occlusion_burst < 1) {
      throw ConfigError("config: occlusion burst must be >= 1");
    }
    if (vae.latent_dim < 1 || vae.hidden_dim < 1 || vae.epochs < 1 ||
        vae.batch < 1 || vae.learning_rate <= 0.0) {
      throw ConfigError("config: vae architecture/training fields out of range");
    }
    if (vae.power_floor < 0.0 || vae.power_floor >= 1.0) {
      throw ConfigError("config: vae.power_floor must be in [0, 1)");
    }
    enhancer.validate();
    if (visual_conditions.empty()) {
      throw ConfigError("config: at least one visual condition required");
    }
    for (const std::string& c : visual_conditions) {
      if (c != "clean" && c != "occluded") {
        throw ConfigError("config: unknown visual condition '" + c + "'");
      }
    }
  }

 private:
  std::string resolve(const std::string& dir, const char* leaf) const {
    return dir.empty() ? out_root + "/" + leaf : dir;
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::vector<std::string>& known,
                                const std::string& where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const std::string& k : known) ok |= (item.key() == k);
    if (!ok) {
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void maybe(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

}  // namespace detail

/// Applies a parsed JSON document over the defaults. Unknown keys anywhere
/// are configuration errors.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown_keys(
      j,
      {"seed", "out_root", "jobs", "stft", "synth", "vae", "enhancer",
       "visual_conditions", "paths"},
      "top level");
  detail::maybe(j, "seed", cfg.seed);
  detail::maybe(j, "out_root", cfg.out_root);
  detail::maybe(j, "jobs", cfg.jobs);
  if (j.contains("stft")) {
    const auto& s = j.at("stft");
    detail::reject_unknown_keys(s, {"window", "hop"}, "stft");
    detail::maybe(s, "window", cfg.stft.window);
    detail::maybe(s, "hop", cfg.stft.hop);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    detail::reject_unknown_keys(
        s,
        {"utterances", "seconds", "sample_rate", "regimes", "visual_dim",
         "snr_grid", "occlusion_fraction", "occlusion_burst"},
        "synth");
    detail::maybe(s, "utterances", cfg.synth.utterances);
    detail::maybe(s, "seconds", cfg.synth.seconds);
    detail::maybe(s, "sample_rate", cfg.synth.sample_rate);
    detail::maybe(s, "regimes", cfg.synth.regimes);
    detail::maybe(s, "visual_dim", cfg.synth.visual_dim);
    detail::maybe(s, "snr_grid", cfg.synth.snr_grid);
    detail::maybe(s, "occlusion_fraction", cfg.synth.occlusion_fraction);
    detail::maybe(s, "occlusion_burst", cfg.synth.occlusion_burst);
  }
  if (j.contains("vae")) {
    const auto& s = j.at("vae");
    detail::reject_unknown_keys(s,
                                {"latent_dim", "hidden_dim", "epochs", "batch",
                                 "learning_rate", "power_floor"},
                                "vae");
    detail::maybe(s, "latent_dim", cfg.vae.latent_dim);
    detail::maybe(s, "hidden_dim", cfg.vae.hidden_dim);
    detail::maybe(s, "epochs", cfg.vae.epochs);
    detail::maybe(s, "batch", cfg.vae.batch);
    detail::maybe(s, "learning_rate", cfg.vae.learning_rate);
    detail::maybe(s, "power_floor", cfg.vae.power_floor);
  }
  if (j.contains("enhancer")) {
    const auto& s = j.at("enhancer");
    detail::reject_unknown_keys(
        s,
        {"mc_samples", "em_iterations", "inner_iterations",
         "inner_learning_rate", "skip_threshold", "variance_floor", "nmf_rank",
         "early_stop", "early_stop_rel_tol", "early_stop_window"},
        "enhancer");
    detail::maybe(s, "mc_samples", cfg.enhancer.mc_samples);
    detail::maybe(s, "em_iterations", cfg.enhancer.em_iterations);
    detail::maybe(s, "inner_iterations", cfg.enhancer.inner_iterations);
    detail::maybe(s, "inner_learning_rate", cfg.enhancer.inner_learning_rate);
    detail::maybe(s, "skip_threshold", cfg.enhancer.skip_threshold);
    detail::maybe(s, "variance_floor", cfg.enhancer.variance_floor);
    detail::maybe(s, "nmf_rank", cfg.enhancer.nmf_rank);
    detail::maybe(s, "early_stop", cfg.enhancer.early_stop);
    detail::maybe(s, "early_stop_rel_tol", cfg.enhancer.early_stop_rel_tol);
    detail::maybe(s, "early_stop_window", cfg.enhancer.early_stop_window);
  }
  detail::maybe(j, "visual_conditions", cfg.visual_conditions);
  if (j.contains("paths")) {
    const auto& s = j.at("paths");
    detail::reject_unknown_keys(s, {"data", "models", "enhanced", "report"},
                                "paths");
    detail::maybe(s, "data", cfg.data_dir);
    detail::maybe(s, "models", cfg.models_dir);
    detail::maybe(s, "enhanced", cfg.enhanced_dir);
    detail::maybe(s, "report", cfg.report_dir);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse failure in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// Fully resolved echo of the configuration, defaults included.
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["out_root"] = cfg.out_root;
  j["jobs"] = cfg.jobs;
  j["stft"] = {{"window", cfg.stft.window}, {"hop", cfg.stft.hop}};
  j["synth"] = {{"utterances", cfg.synth.utterances},
                {"seconds", cfg.synth.seconds},
                {"sample_rate", cfg.synth.sample_rate},
                {"regimes", cfg.synth.regimes},
                {"visual_dim", cfg.synth.visual_dim},
                {"snr_grid", cfg.synth.snr_grid},
                {"occlusion_fraction", cfg.synth.occlusion_fraction},
                {"occlusion_burst", cfg.synth.occlusion_burst}};
  j["vae"] = {{"latent_dim", cfg.vae.latent_dim},
              {"hidden_dim", cfg.vae.hidden_dim},
              {"epochs", cfg.vae.epochs},
              {"batch", cfg.vae.batch},
              {"learning_rate", cfg.vae.learning_rate},
              {"power_floor", cfg.vae.power_floor}};
  j["enhancer"] = {{"mc_samples", cfg.enhancer.mc_samples},
                   {"em_iterations", cfg.enhancer.em_iterations},
                   {"inner_iterations", cfg.enhancer.inner_iterations},
                   {"inner_learning_rate", cfg.enhancer.inner_learning_rate},
                   {"skip_threshold", cfg.enhancer.skip_threshold},
                   {"variance_floor", cfg.enhancer.variance_floor},
                   {"nmf_rank", cfg.enhancer.nmf_rank},
                   {"early_stop", cfg.enhancer.early_stop},
                   {"early_stop_rel_tol", cfg.enhancer.early_stop_rel_tol},
                   {"early_stop_window", cfg.enhancer.early_stop_window}};
  j["visual_conditions"] = cfg.visual_conditions;
  j["paths"] = {{"data", cfg.data()},
                {"models", cfg.models()},
                {"enhanced", cfg.enhanced()},
                {"report", cfg.report()}};
  return j;
}

}  // namespace swvae

#endif  // SWVAE_RUN_CONFIG_HPP_
