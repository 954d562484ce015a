// swvae/tools/swvae.cpp

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

// Command-line front end: synth | train-vae | enhance | eval.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "swvae/errors.hpp"
#include "swvae/pipeline.hpp"
#include "swvae/run_config.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::int64_t seed = -1;
  bool has_seed = false;
  std::string out_root;
  std::int64_t jobs = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "Path to a JSON run config");
  cmd->add_option("--seed", flags->seed, "Override the config seed")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", flags->out_root, "Override the output root");
  cmd->add_option("--jobs", flags->jobs, "Worker threads across utterances")
      ->check(CLI::PositiveNumber);
}

// Precedence for the output root: --out, then SWVAE_OUT_ROOT, then config.
swvae::RunConfig resolve_config(const CommonFlags& flags) {
  swvae::RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = swvae::load_run_config(flags.config_path);
  }
  if (const char* env = std::getenv("SWVAE_OUT_ROOT")) {
    if (*env != '\0') cfg.out_root = env;
  }
  if (!flags.out_root.empty()) cfg.out_root = flags.out_root;
  if (flags.has_seed) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.jobs > 0) cfg.jobs = static_cast<std::size_t>(flags.jobs);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switching variational speech enhancement pipeline"};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, enhance_flags, eval_flags;
  CLI::App* synth = app.add_subcommand("synth", "Synthesize the dataset");
  add_common_flags(synth, &synth_flags);
  CLI::App* train =
      app.add_subcommand("train-vae", "Train the two speech models");
  add_common_flags(train, &train_flags);
  CLI::App* enhance = app.add_subcommand("enhance", "Enhance every mixture");
  add_common_flags(enhance, &enhance_flags);
  CLI::App* eval = app.add_subcommand("eval", "Score enhanced output");
  add_common_flags(eval, &eval_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  synth_flags.has_seed = synth->count("--seed") > 0;
  train_flags.has_seed = train->count("--seed") > 0;
  enhance_flags.has_seed = enhance->count("--seed") > 0;
  eval_flags.has_seed = eval->count("--seed") > 0;

  try {
    if (synth->parsed()) {
      const auto entries = swvae::cmd_synth(resolve_config(synth_flags));
      std::printf("synth: wrote %zu files\n", entries.size());
    } else if (train->parsed()) {
      const auto out = swvae::cmd_train_vae(resolve_config(train_flags));
      std::printf("train-vae: a_vae loss %.6f -> %.6f, av_vae loss %.6f -> %.6f\n",
                  out.a_losses.front(), out.a_losses.back(),
                  out.av_losses.front(), out.av_losses.back());
    } else if (enhance->parsed()) {
      const auto runs = swvae::cmd_enhance(resolve_config(enhance_flags));
      std::printf("enhance: wrote %zu runs\n", runs.size());
    } else if (eval->parsed()) {
      const auto report = swvae::cmd_eval(resolve_config(eval_flags));
      std::printf("eval: scored %zu runs\n", report.at("runs").size());
    }
  } catch (const swvae::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const swvae::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const swvae::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
