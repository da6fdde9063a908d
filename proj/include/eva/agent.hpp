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

#ifndef EVA_AGENT_HPP_
#define EVA_AGENT_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "eva/approximator.hpp"
#include "eva/checkpoint.hpp"
#include "eva/common.hpp"
#include "eva/config.hpp"
#include "eva/replay_memory.hpp"
#include "eva/trace_computation.hpp"
#include "eva/value_buffer.hpp"

namespace eva {

/// Outcome of one action selection.
struct Decision {
  int action = 0;
  bool explored = false;   // chosen uniformly at random
  bool adjusted = false;   // value buffer contributed to the greedy values
  std::vector<double> q_theta;
  std::vector<double> q_eva;
  Embedding embedding;
};

struct AgentStats {
  std::uint64_t env_steps = 0;
  std::uint64_t train_steps = 0;
  std::uint64_t target_syncs = 0;
  std::uint64_t planning_calls = 0;
  std::uint64_t value_inserts = 0;
  std::uint64_t value_queries = 0;
  std::uint64_t value_hits = 0;
  double last_loss = 0.0;
  bool kbrl_converged = true;

  double hit_rate() const {
    return value_queries == 0 ? 0.0 : static_cast<double>(value_hits) / static_cast<double>(value_queries);
  }
};

/// DQN learner whose behaviour policy mixes Q_theta with values cached from
/// planning over trajectories retrieved from its replay memory:
///
///   Q_EVA = (1 - lambda) Q_theta + lambda * mean_k Q_NP
///
/// lambda = 0 reduces to DQN. The adjustments never touch the network weights.
class Agent {
 public:
  Agent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t num_actions, std::uint64_t seed)
      : cfg_(cfg),
        obs_dim_(obs_dim),
        num_actions_(num_actions),
        online_(obs_dim, to_sizes(cfg.hidden_layers), std::size_t(cfg.embedding_dim), num_actions),
        target_(online_),
        optimizer_(online_.parameter_count(), AdamOptions{cfg.learning_rate}),
        replay_(std::size_t(cfg.replay_capacity), std::size_t(cfg.embedding_dim), num_actions),
        values_(std::size_t(cfg.value_buffer_size), std::size_t(cfg.embedding_dim), num_actions),
        lambda_start_(cfg.lambda) {
    cfg_.validate();
    std::seed_seq seq{seed, std::uint64_t{0x65766121}};
    rng_.seed(seq);
    online_.init(rng_);
    sync_target(online_, target_);
    if (cfg_.lambda_anneal_steps > 0) set_lambda_schedule(std::uint64_t(cfg_.lambda_anneal_steps));
  }

  const AgentConfig& config() const { return cfg_; }
  const AgentStats& stats() const { return stats_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t num_actions() const { return num_actions_; }
  const MlpQFunction& network() const { return online_; }
  MlpQFunction& network() { return online_; }
  const MlpQFunction& target_network() const { return target_; }
  const ReplayMemory& replay() const { return replay_; }
  const ValueBuffer& value_buffer() const { return values_; }
  ValueBuffer& value_buffer() { return values_; }

  /// Exploration rate: linear from epsilon_start to epsilon_end, then constant.
  double epsilon() const {
    const auto decay = cfg_.epsilon_decay();
    if (decay <= 0) return cfg_.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(stats_.env_steps) / static_cast<double>(decay));
    return cfg_.epsilon_start + (cfg_.epsilon_end - cfg_.epsilon_start) * frac;
  }

  double lambda() const {
    if (!anneal_horizon_) return lambda_start_;
    if (*anneal_horizon_ == 0) return 0.0;
    const double elapsed = static_cast<double>(stats_.env_steps - anneal_from_);
    const double frac = std::max(0.0, 1.0 - elapsed / static_cast<double>(*anneal_horizon_));
    return lambda_start_ * frac;
  }

  /// Overrides the mixing weight and cancels any schedule.
  void set_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("Agent::set_lambda: lambda must lie in [0, 1]");
    lambda_start_ = lambda;
    anneal_horizon_.reset();
  }

  /// Decays lambda linearly from its current value to 0 over horizon env steps.
  void set_lambda_schedule(std::uint64_t horizon) {
    lambda_start_ = lambda();
    anneal_from_ = stats_.env_steps;
    anneal_horizon_ = horizon;
  }

  /// Frozen agents neither store transitions nor train; planning still runs
  /// over the existing replay memory on the insert period.
  void set_frozen(bool frozen) {
    frozen_ = frozen;
    frozen_steps_ = 0;
  }
  bool frozen() const { return frozen_; }

  /// Starts an independent frozen evaluation episode: clears the value buffer
  /// and restarts the planning cadence.
  void begin_frozen_episode() {
    values_.clear();
    frozen_steps_ = 0;
  }

  Decision act(std::span<const float> obs) { return act(obs, epsilon()); }

  Decision act(std::span<const float> obs, double epsilon) {
    check_dimension("Agent::act observation", obs_dim_, obs.size());
    Decision d;
    d.q_theta.resize(num_actions_);
    d.embedding.resize(online_.embedding_dim());
    online_.evaluate(obs, 1, d.q_theta, d.embedding);
    d.q_eva = mix(d.q_theta, d.embedding, d.adjusted);
    select(d, epsilon);
    return d;
  }

  /// Lockstep action selection for several environments with one batched forward pass.
  std::vector<Decision> act_batch(std::span<const float> obs, std::size_t n) {
    check_dimension("Agent::act_batch observations", obs_dim_ * n, obs.size());
    std::vector<double> q(n * num_actions_);
    std::vector<float> e(n * online_.embedding_dim());
    online_.evaluate(obs, n, q, e);
    const double eps = epsilon();
    std::vector<Decision> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& d = out[i];
      d.q_theta.assign(q.begin() + std::ptrdiff_t(i * num_actions_), q.begin() + std::ptrdiff_t((i + 1) * num_actions_));
      d.embedding.assign(e.begin() + std::ptrdiff_t(i * online_.embedding_dim()),
                         e.begin() + std::ptrdiff_t((i + 1) * online_.embedding_dim()));
      d.q_eva = mix(d.q_theta, d.embedding, d.adjusted);
      select(d, eps);
    }
    return out;
  }

  /// Records the environment's response to the last action and runs planning,
  /// training and target syncs on their schedules (all gated by warm-up).
  void observe(Transition t) {
    check_dimension("Agent::observe observation", obs_dim_, t.obs.size());
    if (frozen_) {
      const bool plan_now = cfg_.planning && frozen_steps_ % std::uint64_t(cfg_.insert_period) == 0;
      ++frozen_steps_;
      if (plan_now) plan(t.embedding);
      return;
    }
    const Embedding h = t.embedding;
    replay_.append(std::move(t));
    ++stats_.env_steps;
    const auto warmup = std::uint64_t(cfg_.warmup_steps);
    if (stats_.env_steps <= warmup) return;
    const auto since = stats_.env_steps - warmup;
    if (cfg_.planning && since % std::uint64_t(cfg_.insert_period) == 0) plan(h);
    if (since % std::uint64_t(cfg_.replay_period) == 0) train();
  }

  /// Retrieves the M nearest trajectories, runs the configured trace
  /// computation and caches every per-step estimate in the value buffer.
  void plan(std::span<const float> h) {
    ++stats_.planning_calls;
    const auto slices =
        replay_.knn_trajectories(h, std::size_t(cfg_.planning_neighbours), std::size_t(cfg_.rollout_length));
    if (slices.empty()) return;

    std::size_t total = 0;
    for (const auto& s : slices) total += s.size();
    std::vector<float> obs;
    obs.reserve(total * obs_dim_);
    for (const auto& s : slices) {
      for (const auto& tr : s.transitions) obs.insert(obs.end(), tr.obs.begin(), tr.obs.end());
    }
    std::vector<double> q_all(total * num_actions_);
    online_.evaluate(obs, total, q_all, {});

    std::vector<std::vector<double>> q_theta;
    q_theta.reserve(slices.size());
    std::size_t offset = 0;
    for (const auto& s : slices) {
      const auto begin = q_all.begin() + std::ptrdiff_t(offset * num_actions_);
      q_theta.emplace_back(begin, begin + std::ptrdiff_t(s.size() * num_actions_));
      offset += s.size();
    }

    std::vector<QTable> tables;
    const double gamma = cfg_.gamma;
    switch (cfg_.trace_mode) {
      case TraceMode::kNStep:
        for (std::size_t m = 0; m < slices.size(); ++m) {
          tables.push_back(nstep_trace(slices[m], q_theta[m], num_actions_, gamma));
        }
        break;
      case TraceMode::kTcp:
        for (std::size_t m = 0; m < slices.size(); ++m) {
          tables.push_back(tcp_trace(slices[m], q_theta[m], num_actions_, gamma));
        }
        break;
      case TraceMode::kKbrl: {
        auto res = kbrl_trace(slices, q_theta, num_actions_, cfg_.kernel, gamma);
        stats_.kbrl_converged = stats_.kbrl_converged && res.converged;
        tables = std::move(res.tables);
        break;
      }
    }
    for (std::size_t m = 0; m < slices.size(); ++m) {
      for (std::size_t t = 0; t < slices[m].size(); ++t) {
        values_.insert(slices[m].transitions[t].embedding, tables[m].row(t));
        ++stats_.value_inserts;
      }
    }
  }

  // -- checkpointing --------------------------------------------------------

  void write_chunks(CheckpointWriter& out, bool include_value_buffer) const {
    {
      ByteWriter w;
      online_.write(w);
      out.add(chunk::kNetwork, w.bytes());
    }
    {
      ByteWriter w;
      target_.write(w);
      out.add(chunk::kTarget, w.bytes());
    }
    {
      ByteWriter w;
      optimizer_.write(w);
      out.add(chunk::kOptimizer, w.bytes());
    }
    {
      ByteWriter w;
      replay_.write(w);
      out.add(chunk::kReplay, w.bytes());
    }
    if (include_value_buffer) {
      ByteWriter w;
      values_.write(w);
      out.add(chunk::kValueBuffer, w.bytes());
    }
    {
      ByteWriter w;
      w.put<std::uint64_t>(obs_dim_);
      w.put<std::uint64_t>(num_actions_);
      w.put<std::uint64_t>(stats_.env_steps);
      w.put<std::uint64_t>(stats_.train_steps);
      w.put<std::uint64_t>(stats_.target_syncs);
      w.put<std::uint64_t>(stats_.planning_calls);
      w.put<std::uint64_t>(stats_.value_inserts);
      w.put<std::uint64_t>(stats_.value_queries);
      w.put<std::uint64_t>(stats_.value_hits);
      w.put<double>(stats_.last_loss);
      w.put_bool(stats_.kbrl_converged);
      w.put<double>(lambda_start_);
      w.put_bool(anneal_horizon_.has_value());
      w.put<std::uint64_t>(anneal_horizon_.value_or(0));
      w.put<std::uint64_t>(anneal_from_);
      out.add(chunk::kAgentState, w.bytes());
    }
    {
      ByteWriter w;
      w.put_rng(rng_);
      out.add(chunk::kRng, w.bytes());
    }
  }

  /// Rebuilds an agent from checkpoint chunks. The value buffer starts empty
  /// when the checkpoint carries none.
  static Agent read_chunks(const CheckpointReader& in, const AgentConfig& cfg) {
    auto state = in.open(chunk::kAgentState);
    const auto obs_dim = state.get<std::uint64_t>();
    const auto num_actions = state.get<std::uint64_t>();
    Agent agent(cfg, obs_dim, num_actions, 0);
    auto& s = agent.stats_;
    s.env_steps = state.get<std::uint64_t>();
    s.train_steps = state.get<std::uint64_t>();
    s.target_syncs = state.get<std::uint64_t>();
    s.planning_calls = state.get<std::uint64_t>();
    s.value_inserts = state.get<std::uint64_t>();
    s.value_queries = state.get<std::uint64_t>();
    s.value_hits = state.get<std::uint64_t>();
    s.last_loss = state.get<double>();
    s.kbrl_converged = state.get_bool();
    agent.lambda_start_ = state.get<double>();
    const bool has_schedule = state.get_bool();
    const auto horizon = state.get<std::uint64_t>();
    agent.anneal_horizon_ = has_schedule ? std::optional<std::uint64_t>(horizon) : std::nullopt;
    agent.anneal_from_ = state.get<std::uint64_t>();
    state.expect_done();

    auto net = in.open(chunk::kNetwork);
    agent.online_ = MlpQFunction::read(net);
    net.expect_done();
    auto tnet = in.open(chunk::kTarget);
    agent.target_ = MlpQFunction::read(tnet);
    tnet.expect_done();
    if (agent.online_.input_dim() != obs_dim || agent.online_.num_actions() != num_actions ||
        !agent.online_.net().same_architecture(agent.target_.net())) {
      throw CheckpointError("network shapes disagree with agent state");
    }
    if (agent.online_.embedding_dim() != std::size_t(cfg.embedding_dim)) {
      throw CheckpointError("network embedding width disagrees with config");
    }
    auto opt = in.open(chunk::kOptimizer);
    agent.optimizer_ = Adam<float>::read(opt);
    opt.expect_done();
    auto rep = in.open(chunk::kReplay);
    agent.replay_ = ReplayMemory::read(rep);
    rep.expect_done();
    if (in.has(chunk::kValueBuffer)) {
      auto vb = in.open(chunk::kValueBuffer);
      agent.values_ = ValueBuffer::read(vb);
      vb.expect_done();
    }
    auto rng = in.open(chunk::kRng);
    rng.get_rng(agent.rng_);
    rng.expect_done();
    return agent;
  }

 private:
  static std::vector<std::size_t> to_sizes(const std::vector<std::int64_t>& v) {
    return {v.begin(), v.end()};
  }

  std::vector<double> mix(const std::vector<double>& q_theta, const Embedding& h, bool& adjusted) {
    const double lambda = this->lambda();
    adjusted = false;
    if (lambda <= 0.0) return q_theta;
    ++stats_.value_queries;
    const auto estimate = values_.estimate(h, std::size_t(cfg_.value_neighbours), cfg_.temperature);
    if (!estimate) return q_theta;
    ++stats_.value_hits;
    adjusted = true;
    std::vector<double> q(num_actions_);
    for (std::size_t a = 0; a < num_actions_; ++a) {
      q[a] = (1.0 - lambda) * q_theta[a] + lambda * (*estimate)[a];
    }
    return q;
  }

  void select(Decision& d, double epsilon) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng_) < epsilon) {
      std::uniform_int_distribution<int> pick(0, int(num_actions_) - 1);
      d.action = pick(rng_);
      d.explored = true;
    } else {
      d.action = static_cast<int>(argmax<double>(d.q_eva));
    }
  }

  void train() {
    // A single stream needs at least one linked pair before anything is trainable.
    if (replay_.size() <= std::size_t(cfg_.parallel_envs)) return;
    const auto batch = replay_.sample(rng_, std::size_t(cfg_.batch_size));
    stats_.last_loss = train_step(online_, target_, batch, static_cast<float>(cfg_.gamma), optimizer_);
    ++stats_.train_steps;
    if (stats_.train_steps % std::uint64_t(cfg_.target_period) == 0) {
      sync_target(online_, target_);
      ++stats_.target_syncs;
    }
  }

  AgentConfig cfg_;
  std::size_t obs_dim_;
  std::size_t num_actions_;
  MlpQFunction online_;
  MlpQFunction target_;
  Adam<float> optimizer_;
  ReplayMemory replay_;
  ValueBuffer values_;
  std::mt19937_64 rng_;
  AgentStats stats_;
  double lambda_start_;
  std::optional<std::uint64_t> anneal_horizon_;
  std::uint64_t anneal_from_ = 0;
  bool frozen_ = false;
  std::uint64_t frozen_steps_ = 0;
};

}  // namespace eva

#endif  // EVA_AGENT_HPP_
