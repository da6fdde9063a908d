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

#include <string>

#include <gtest/gtest.h>

#include "eva/config.hpp"

namespace eva {
namespace {

TEST(Config, Defaults) {
  const AgentConfig a;
  EXPECT_EQ(a.lambda, 0.4);
  EXPECT_EQ(a.gamma, 0.99);
  EXPECT_EQ(a.insert_period, 20);
  EXPECT_EQ(a.rollout_length, 50);
  EXPECT_EQ(a.planning_neighbours, 10);
  EXPECT_EQ(a.value_neighbours, 5);
  EXPECT_EQ(a.temperature, 1e-5);
  EXPECT_EQ(a.trace_mode, TraceMode::kTcp);
  EXPECT_EQ(a.learning_rate, 1e-4);
  EXPECT_EQ(a.batch_size, 48);
  EXPECT_EQ(a.value_buffer_size, 2000);
  EXPECT_EQ(a.target_period, 50);
  EXPECT_EQ(a.replay_period, 4);
  EXPECT_EQ(a.hidden_layers, (std::vector<std::int64_t>{256}));
  EXPECT_EQ(a.embedding_dim, 64);
  EXPECT_EQ(a.parallel_envs, 1);
  // desk scale
  EXPECT_EQ(a.replay_capacity, 50000);
  EXPECT_EQ(a.warmup_steps, 5000);
  EXPECT_EQ(ExperimentConfig{}.total_steps, 300000);
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Config, HyperparameterNamesAreKeys) {
  const auto text = format_config(ExperimentConfig{});
  for (const char* key : {"Temperature", "Insert period", "k", "λ", "M", "T", "No training period",
                          "Learning rate", "Replay buffer capacity", "Value buffer size",
                          "Training batch size", "Target network period", "Number of parallel environments",
                          "Filter sizes", "Filter strides", "Channels", "Number of fully connected activations"}) {
    EXPECT_NE(text.find(std::string("\n") + key + " = "), std::string::npos) << key;
  }
}

TEST(Config, FormatParseRoundTrip) {
  auto cfg = preset_config("two-coin");
  cfg.agent.lambda = 0.2;
  cfg.agent.trace_mode = TraceMode::kKbrl;
  cfg.agent.kernel.bandwidth = 0.125;
  cfg.agent.hidden_layers = {64, 32};
  cfg.agent.planning = false;
  cfg.lambdas = {0.0, 0.3};
  cfg.map_path = "maps/x.txt";
  cfg.seed = 17;
  const auto text = format_config(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  EXPECT_EQ(back.agent.lambda, 0.2);
  EXPECT_EQ(back.agent.trace_mode, TraceMode::kKbrl);
  EXPECT_FALSE(back.agent.planning);
  EXPECT_EQ(back.n_coins, 2);
  EXPECT_EQ(back.lambdas, (std::vector<double>{0.0, 0.3}));
}

TEST(Config, DoublesRoundTripExactly) {
  ExperimentConfig cfg;
  cfg.agent.learning_rate = 0.1 + 0.2;
  EXPECT_EQ(parse_config(format_config(cfg)).agent.learning_rate, 0.1 + 0.2);
}

TEST(Config, CommentsBlankLinesAndAlias) {
  const auto cfg = parse_config("# header\n\nlambda = 0.6  # mixing\nM=3\n");
  EXPECT_EQ(cfg.agent.lambda, 0.6);
  EXPECT_EQ(cfg.agent.planning_neighbours, 3);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("nope = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("M\n"), ConfigError);
  EXPECT_THROW(parse_config("M = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("M = 10x\n"), ConfigError);
  EXPECT_THROW(parse_config("planning = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("trace_mode = mc\n"), ConfigError);
  EXPECT_THROW(parse_config("Channels = 1,2\n"), ConfigError);
  EXPECT_THROW(preset_config("three-coin"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/eva.cfg"), ConfigError);
  try {
    parse_config("bogus_key = 1\n");
    ADD_FAILURE() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
  }
}

TEST(Config, Validation) {
  auto bad = [](auto mutate) {
    ExperimentConfig cfg;
    mutate(cfg);
    return [cfg] { cfg.validate(); };
  };
  EXPECT_THROW(bad([](auto& c) { c.agent.lambda = 1.5; })(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.agent.insert_period = 0; })(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.agent.temperature = -1; })(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.agent.kernel.bandwidth = 0; })(), Error);
  EXPECT_THROW(bad([](auto& c) { c.total_steps = 10; })(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.observation = "depth"; })(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.lambdas = {0.0, -0.1}; })(), ConfigError);
}

TEST(Config, Presets) {
  EXPECT_EQ(preset_config("default").preset, "one-coin");
  EXPECT_EQ(preset_config("two-coin").n_coins, 2);
  const auto smoke = preset_config("smoke");
  EXPECT_NO_THROW(smoke.validate());
  EXPECT_LT(smoke.total_steps, 10000);
}

TEST(Config, EpsilonDecayFallsBackToWarmup) {
  AgentConfig a;
  a.epsilon_decay_steps = -1;
  EXPECT_EQ(a.epsilon_decay(), a.warmup_steps);
}

}  // namespace
}  // namespace eva
