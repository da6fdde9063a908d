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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "eva/harness.hpp"

namespace eva {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eva_test_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig smoke() {
  auto cfg = preset_config("smoke");
  cfg.agent.planning_neighbours = 4;
  cfg.agent.rollout_length = 20;
  return cfg;
}

TEST(Metrics, RowsRoundTripThroughCsv) {
  const auto dir = scratch("csv");
  {
    MetricsWriter w(dir / "m.csv");
    MetricsRow r;
    r.env_step = 5;
    r.episode_return = 0.25;
    r.loss = 1e-3;
    r.planning_calls = 2;
    r.lambda = 0.4;
    r.episodes = 7;
    r.epsilon = 0.5;
    w.append(r);
    r.env_step = 10;
    w.append(r);
    r.env_step = 10;
    EXPECT_THROW(w.append(r), Error);
  }
  const auto rows = read_metrics(dir / "m.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].env_step, 10u);
  EXPECT_EQ(rows[0].episode_return, 0.25);
  EXPECT_EQ(rows[0].loss, 1e-3);
  EXPECT_EQ(rows[0].episodes, 7u);
  EXPECT_EQ(slurp(dir / "m.csv").substr(0, kMetricsHeader.size()), kMetricsHeader);
}

TEST(Metrics, RejectsForeignFiles) {
  const auto dir = scratch("foreign");
  fs::create_directories(dir);
  std::ofstream(dir / "x.csv") << "a,b\n1,2\n";
  EXPECT_THROW(read_metrics(dir / "x.csv"), Error);
  EXPECT_THROW(read_metrics(dir / "missing.csv"), Error);
  std::ofstream(dir / "unordered.csv") << kMetricsHeader << "\n10,0,0,0,0,0,0,0\n5,0,0,0,0,0,0,0\n";
  EXPECT_THROW(read_metrics(dir / "unordered.csv"), Error);
}

TEST(Harness, TrainingWritesOrderedMetrics) {
  const auto cfg = smoke();
  const auto res = run_training(cfg, 0, scratch("train"));
  ASSERT_EQ(res.rows.size(), std::size_t(cfg.total_steps / cfg.eval_period));
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    EXPECT_EQ(res.rows[i].env_step, std::uint64_t(cfg.eval_period) * (i + 1));
  }
  EXPECT_TRUE(fs::exists(res.checkpoint));
  EXPECT_FALSE(res.episodes.empty());
  EXPECT_TRUE(std::isfinite(res.final_return));
  EXPECT_GT(res.rows.back().planning_calls, 0u);
  EXPECT_TRUE(std::isnan(res.rows.front().loss));  // warm-up row
  EXPECT_TRUE(std::isfinite(res.rows.back().loss));
}

TEST(Harness, SameSeedSameBytes) {
  const auto cfg = smoke();
  const auto a = run_training(cfg, 7, scratch("det_a"));
  const auto b = run_training(cfg, 7, scratch("det_b"));
  EXPECT_EQ(slurp(a.metrics), slurp(b.metrics));
  EXPECT_EQ(slurp(a.checkpoint), slurp(b.checkpoint));
  const auto c = run_training(cfg, 8, scratch("det_c"));
  EXPECT_NE(slurp(a.metrics), slurp(c.metrics));
}

TEST(Harness, SingleEpisodeEvalPairsStartStates) {
  const auto cfg = smoke();
  const auto res = run_training(cfg, 1, scratch("eval"));
  const auto rows = run_single_episode_eval(res.checkpoint, {0.0, 0.4}, 5, 3);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.returns.size(), 5u);
    for (double x : r.returns) {
      EXPECT_LE(x, 1.0);
      EXPECT_GE(x, -5.0 - 1e-9);
    }
  }
  // The checkpoint is untouched and repeat evaluations agree.
  const auto again = run_single_episode_eval(res.checkpoint, {0.0, 0.4}, 5, 3);
  EXPECT_EQ(again[0].returns, rows[0].returns);
  EXPECT_EQ(again[1].returns, rows[1].returns);
}

TEST(Harness, SummarizeStatistics) {
  const auto row = summarize(0.2, {1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(row.mean, 2.5);
  EXPECT_NEAR(row.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(summarize(0.0, {1.0}).stderr_, 0.0);
}

TEST(Harness, AnnealDrivesLambdaToZero) {
  const auto cfg = smoke();
  const auto dir = scratch("anneal");
  const auto base = run_training(cfg, 2, dir / "train");
  const auto res = run_anneal(base.checkpoint, 1000, 500, dir / "anneal");
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_EQ(res.rows.front().env_step, 3500u);
  EXPECT_NEAR(res.rows.front().lambda, 0.2, 1e-12);
  EXPECT_EQ(res.rows[1].lambda, 0.0);
  EXPECT_EQ(res.rows.back().lambda, 0.0);
}

TEST(Harness, TraceAblationSharesStepGrid) {
  auto cfg = smoke();
  cfg.total_steps = 1500;
  const auto out = run_trace_ablation(cfg, scratch("ablate"));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].mode, TraceMode::kNStep);
  EXPECT_EQ(out[1].mode, TraceMode::kTcp);
  EXPECT_EQ(out[2].mode, TraceMode::kKbrl);
  for (const auto& mode : out) {
    ASSERT_EQ(mode.runs.size(), 1u);
    const auto& run = mode.runs[0];
    EXPECT_TRUE(fs::exists(run.metrics));
    ASSERT_EQ(run.rows.size(), out[0].runs[0].rows.size());
    for (std::size_t i = 0; i < run.rows.size(); ++i) EXPECT_EQ(run.rows[i].env_step, out[0].runs[0].rows[i].env_step);
  }
}

TEST(Harness, LambdaSweepUsesEveryValue) {
  auto cfg = smoke();
  cfg.total_steps = 1000;
  cfg.lambdas = {0.0, 0.5};
  cfg.seeds = 2;
  const auto out = sweep_lambda(cfg, scratch("sweep"));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].lambda, 0.5);
  EXPECT_EQ(out[1].runs.size(), 2u);
  EXPECT_EQ(out[0].runs[0].rows.back().lambda, 0.0);
  EXPECT_EQ(out[1].runs[1].rows.back().lambda, 0.5);
}

}  // namespace
}  // namespace eva
