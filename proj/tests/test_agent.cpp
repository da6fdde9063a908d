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

#include <algorithm>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "eva/harness.hpp"

namespace eva {
namespace {

AgentConfig tiny(double lambda) {
  AgentConfig cfg;
  cfg.lambda = lambda;
  cfg.hidden_layers = {8};
  cfg.embedding_dim = 4;
  return cfg;
}

// Forces Q_theta to a constant by zeroing the output weights.
void set_constant_output(Agent& agent, const std::vector<float>& q) {
  auto p = agent.network().net().parameters();
  const std::size_t tail = q.size() * std::size_t(agent.config().embedding_dim) + q.size();
  std::fill(p.end() - std::ptrdiff_t(tail), p.end(), 0.0f);
  std::copy(q.begin(), q.end(), p.end() - std::ptrdiff_t(q.size()));
}

ExperimentConfig session_config(double lambda) {
  auto cfg = preset_config("smoke");
  cfg.agent.lambda = lambda;
  cfg.agent.planning_neighbours = 4;
  cfg.agent.rollout_length = 20;
  return cfg;
}

// Q_theta = [1, 3], Q_NP = [2, 0]. lambda weights Q_NP, so 0.6 gives [1.6, 1.2].
TEST(Agent, MixingArithmetic) {
  for (const auto& [lambda, q0, q1, action] : {std::tuple{0.4, 1.4, 1.8, 1}, std::tuple{0.6, 1.6, 1.2, 0}}) {
    Agent agent(tiny(lambda), 3, 2, 0);
    set_constant_output(agent, {1.0f, 3.0f});
    const std::vector<float> obs{0.1f, 0.2f, 0.3f};
    agent.value_buffer().insert(agent.network().embedding(obs), std::vector<double>{2.0, 0.0});
    const auto d = agent.act(obs, 0.0);
    EXPECT_EQ(d.q_theta, (std::vector<double>{1.0, 3.0}));
    ASSERT_TRUE(d.adjusted);
    EXPECT_NEAR(d.q_eva[0], q0, 1e-12) << lambda;
    EXPECT_NEAR(d.q_eva[1], q1, 1e-12) << lambda;
    EXPECT_EQ(d.action, action) << lambda;
    EXPECT_FALSE(d.explored);
  }
}

TEST(Agent, LambdaZeroIgnoresValueBuffer) {
  Agent agent(tiny(0.0), 3, 2, 0);
  set_constant_output(agent, {1.0f, 3.0f});
  const std::vector<float> obs{0.1f, 0.2f, 0.3f};
  agent.value_buffer().insert(agent.network().embedding(obs), std::vector<double>{2.0, 0.0});
  const auto d = agent.act(obs, 0.0);
  EXPECT_EQ(d.q_eva, d.q_theta);
  EXPECT_EQ(d.action, 1);
  EXPECT_FALSE(d.adjusted);
  EXPECT_EQ(agent.stats().value_queries, 0u);
}

TEST(Agent, EmptyValueBufferFallsBackToNetwork) {
  Agent agent(tiny(0.4), 3, 2, 0);
  const auto d = agent.act(std::vector<float>{0, 0, 1}, 0.0);
  EXPECT_EQ(d.q_eva, d.q_theta);
  EXPECT_FALSE(d.adjusted);
  EXPECT_EQ(agent.stats().value_queries, 1u);
  EXPECT_EQ(agent.stats().value_hits, 0u);
}

TEST(Agent, EpsilonSchedule) {
  auto cfg = session_config(0.4);
  cfg.agent.epsilon_start = 1.0;
  cfg.agent.epsilon_end = 0.1;
  cfg.agent.epsilon_decay_steps = 1000;
  Session s(cfg, 0);
  EXPECT_DOUBLE_EQ(s.agent().epsilon(), 1.0);
  s.run(500);
  EXPECT_DOUBLE_EQ(s.agent().epsilon(), 0.55);
  s.run(1000);
  EXPECT_DOUBLE_EQ(s.agent().epsilon(), 0.1);
}

TEST(Agent, NothingHappensDuringWarmup) {
  Session s(session_config(0.4), 2);
  s.run(500);
  EXPECT_EQ(s.agent().stats().planning_calls, 0u);
  EXPECT_EQ(s.agent().stats().train_steps, 0u);
  EXPECT_TRUE(s.agent().value_buffer().empty());
  EXPECT_EQ(s.agent().replay().size(), 500u);
}

TEST(Agent, PlanningAndTrainingCadence) {
  const auto cfg = session_config(0.4);
  Session s(cfg, 2);
  for (std::uint64_t n : {510u, 520u, 777u, 1500u}) {
    s.run(n - s.agent().stats().env_steps);
    const auto since = n - std::uint64_t(cfg.agent.warmup_steps);
    EXPECT_EQ(s.agent().stats().planning_calls, since / std::uint64_t(cfg.agent.insert_period)) << n;
    EXPECT_EQ(s.agent().stats().train_steps, since / std::uint64_t(cfg.agent.replay_period)) << n;
    EXPECT_EQ(s.agent().stats().target_syncs, s.agent().stats().train_steps / std::uint64_t(cfg.agent.target_period));
  }
  // M = 4, T = 20: at most 80 insertions per call.
  EXPECT_LE(s.agent().stats().value_inserts, s.agent().stats().planning_calls * 80);
  EXPECT_GT(s.agent().stats().value_inserts, 0u);
}

TEST(Agent, LambdaZeroMatchesPlanningDisabled) {
  auto with = session_config(0.0);
  auto without = with;
  without.agent.planning = false;
  Session a(with, 4), b(without, 4);
  std::vector<int> xs, ys;
  a.run(3000, nullptr, [&](int x) { xs.push_back(x); });
  b.run(3000, nullptr, [&](int y) { ys.push_back(y); });
  EXPECT_EQ(xs, ys);
  EXPECT_TRUE(std::equal(a.agent().network().net().parameters().begin(), a.agent().network().net().parameters().end(),
                         b.agent().network().net().parameters().begin()));
  EXPECT_GT(a.agent().stats().planning_calls, 0u);
  EXPECT_EQ(b.agent().stats().planning_calls, 0u);
}

TEST(Agent, LambdaAnnealSchedule) {
  Session s(session_config(0.4), 1);
  s.run(700);
  s.agent().set_lambda_schedule(100);
  EXPECT_DOUBLE_EQ(s.agent().lambda(), 0.4);
  s.run(50);
  EXPECT_NEAR(s.agent().lambda(), 0.2, 1e-12);
  s.run(50);
  EXPECT_EQ(s.agent().lambda(), 0.0);
  s.run(50);
  EXPECT_EQ(s.agent().lambda(), 0.0);
  s.agent().set_lambda(0.3);
  EXPECT_EQ(s.agent().lambda(), 0.3);
  EXPECT_THROW(s.agent().set_lambda(1.5), Error);
}

TEST(Agent, ConfiguredAnnealStartsAtConstruction) {
  auto cfg = tiny(0.5);
  cfg.lambda_anneal_steps = 10;
  Agent agent(cfg, 3, 2, 0);
  EXPECT_EQ(agent.lambda(), 0.5);
}

TEST(Agent, FrozenAgentDoesNotLearn) {
  Session s(session_config(0.4), 5);
  s.run(1000);
  auto& agent = s.agent();
  const auto before = agent.stats();
  const std::vector<float> params(agent.network().net().parameters().begin(), agent.network().net().parameters().end());
  const auto replay_size = agent.replay().size();

  agent.set_frozen(true);
  agent.begin_frozen_episode();
  EXPECT_TRUE(agent.value_buffer().empty());
  GridWorld env;
  std::mt19937_64 rng(0);
  auto obs = env.reset(rng, 1);
  for (std::uint32_t step = 0; step < 45; ++step) {
    auto d = agent.act(obs, 0.0);
    auto res = env.step(d.action);
    agent.observe(Transition{obs, d.action, res.reward, d.embedding, ~std::uint64_t{0}, step, res.terminal});
    obs = res.obs;
    if (res.done) obs = env.reset(rng, 1);
  }
  EXPECT_EQ(agent.stats().env_steps, before.env_steps);
  EXPECT_EQ(agent.stats().train_steps, before.train_steps);
  EXPECT_EQ(agent.replay().size(), replay_size);
  EXPECT_TRUE(std::equal(params.begin(), params.end(), agent.network().net().parameters().begin()));
  // steps 0, 20 and 40 plan
  EXPECT_EQ(agent.stats().planning_calls, before.planning_calls + 3);
  EXPECT_FALSE(agent.value_buffer().empty());
}

TEST(Agent, BatchedActingMatchesSingle) {
  auto cfg = tiny(0.4);
  cfg.epsilon_start = cfg.epsilon_end = 0.0;
  Agent agent(cfg, 3, 4, 9);
  const std::vector<float> obs{0.1f, 0.2f, 0.3f, -1.0f, 0.5f, 2.0f};
  agent.value_buffer().insert(agent.network().embedding(std::span<const float>(obs).first(3)),
                              std::vector<double>{0, 1, 2, 3});
  const auto batch = agent.act_batch(obs, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto d = agent.act(std::span<const float>(obs).subspan(3 * i, 3));
    EXPECT_EQ(batch[i].action, d.action);
    EXPECT_EQ(batch[i].q_eva, d.q_eva);
    EXPECT_EQ(batch[i].embedding, d.embedding);
  }
}

TEST(Agent, ParallelEnvironmentsRun) {
  auto cfg = session_config(0.4);
  cfg.agent.parallel_envs = 4;
  Session s(cfg, 0);
  s.run(1000);
  EXPECT_EQ(s.agent().stats().env_steps, 1000u);
  EXPECT_GT(s.agent().stats().planning_calls, 0u);
}

TEST(Agent, RejectsWrongObservationSize) {
  Agent agent(tiny(0.4), 3, 2, 0);
  EXPECT_THROW(agent.act(std::vector<float>{1, 2}), DimensionError);
}

}  // namespace
}  // namespace eva
