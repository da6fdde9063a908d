// Copyright 2026 The EVA Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver for training and evaluation experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eva/eva.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset = "one-coin";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value config file applied over the preset");
  cmd->add_option("--preset", o.preset, "one-coin, two-coin or smoke")->capture_default_str();
  cmd->add_option("--seed", o.seed, "first seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.overrides, "extra key=value overrides");
}

eva::ExperimentConfig resolve(const CommonOptions& o) {
  auto cfg = eva::preset_config(o.preset);
  if (!o.config_path.empty()) cfg = eva::load_config(o.config_path, cfg);
  for (const auto& kv : o.overrides) cfg = eva::parse_config(kv, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void report(const std::string& label, const std::vector<eva::RunResult>& runs) {
  for (const auto& r : runs) {
    std::cout << label << "  " << r.metrics.string() << "  final_return=" << fmt(r.final_return)
              << (r.diverged ? "  DIVERGED: " + r.diagnostic : std::string()) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ephemeral value adjustment experiments on the coin gridworld"};
  app.require_subcommand(1);

  CommonOptions train_opts, eval_opts, ablate_opts, sweep_opts, anneal_opts;
  std::string eval_checkpoint, anneal_checkpoint;
  std::optional<std::size_t> eval_episodes;
  std::uint64_t horizon = 50000;
  std::uint64_t extra = 5000;

  auto* train = app.add_subcommand("train", "train one agent per seed");
  add_common(train, train_opts);

  auto* eval = app.add_subcommand("eval-episode", "frozen single-episode evaluation over the lambda grid");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint with network and replay buffer")->required();
  eval->add_option("--episodes", eval_episodes, "episodes per lambda (default: eval_episodes)");

  auto* ablate = app.add_subcommand("ablate-trace", "nstep / tcp / kbrl training runs with shared seeds");
  add_common(ablate, ablate_opts);

  auto* sweep = app.add_subcommand("sweep-lambda", "training runs over the lambda grid");
  add_common(sweep, sweep_opts);

  auto* anneal = app.add_subcommand("anneal", "continue a checkpoint while lambda decays to zero");
  add_common(anneal, anneal_opts);
  anneal->add_option("--checkpoint", anneal_checkpoint, "checkpoint to continue")->required();
  anneal->add_option("--horizon", horizon, "env steps over which lambda reaches zero")->capture_default_str();
  anneal->add_option("--extra", extra, "env steps at lambda = 0 after the horizon")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      const auto cfg = resolve(train_opts);
      std::vector<eva::RunResult> runs;
      for (std::int64_t k = 0; k < cfg.seeds; ++k) {
        const auto seed = cfg.seed + std::uint64_t(k);
        runs.push_back(eva::run_training(cfg, seed, std::filesystem::path(cfg.output_dir) / ("seed" + std::to_string(seed))));
      }
      report("train", runs);
    } else if (*eval) {
      const auto cfg = resolve(eval_opts);
      const auto rows = eva::run_single_episode_eval(
          eval_checkpoint, cfg.lambdas, eval_episodes.value_or(std::size_t(cfg.eval_episodes)), cfg.seed,
          cfg.eval_epsilon);
      std::filesystem::create_directories(cfg.output_dir);
      const auto path = std::filesystem::path(cfg.output_dir) / "eval.csv";
      std::ofstream csv(path);
      csv << "lambda,mean_return,stderr,episodes\n";
      std::cout << "lambda  mean_return  stderr\n";
      for (const auto& r : rows) {
        csv << eva::config_detail::format_double(r.lambda) << ',' << eva::config_detail::format_double(r.mean) << ','
            << eva::config_detail::format_double(r.stderr_) << ',' << r.returns.size() << '\n';
        std::cout << fmt(r.lambda) << "  " << fmt(r.mean) << "  " << fmt(r.stderr_) << '\n';
      }
      if (!csv) throw eva::Error("failed writing " + path.string());
    } else if (*ablate) {
      const auto cfg = resolve(ablate_opts);
      for (const auto& res : eva::run_trace_ablation(cfg, cfg.output_dir)) report(eva::to_string(res.mode), res.runs);
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      for (const auto& res : eva::sweep_lambda(cfg, cfg.output_dir)) report("lambda=" + fmt(res.lambda), res.runs);
    } else if (*anneal) {
      const auto cfg = resolve(anneal_opts);
      const auto res = eva::run_anneal(anneal_checkpoint, horizon, extra, cfg.output_dir);
      report("anneal", {res});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
