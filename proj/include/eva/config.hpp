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

#ifndef EVA_CONFIG_HPP_
#define EVA_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eva/common.hpp"
#include "eva/trace_computation.hpp"

namespace eva {

enum class TraceMode { kNStep, kTcp, kKbrl };

inline std::string to_string(TraceMode m) {
  switch (m) {
    case TraceMode::kNStep: return "nstep";
    case TraceMode::kTcp: return "tcp";
    case TraceMode::kKbrl: return "kbrl";
  }
  return "tcp";
}

inline TraceMode parse_trace_mode(std::string_view s) {
  if (s == "nstep") return TraceMode::kNStep;
  if (s == "tcp") return TraceMode::kTcp;
  if (s == "kbrl") return TraceMode::kKbrl;
  throw ConfigError("unknown trace mode '" + std::string(s) + "' (expected nstep, tcp or kbrl)");
}

/// Every tunable of the agent. Mixing follows Q = (1 - lambda) Q_theta + lambda Q_NP,
/// so lambda = 0 is plain DQN.
struct AgentConfig {
  double lambda = 0.4;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 50000;  // -1: decay over the warm-up period
  std::int64_t insert_period = 20;
  std::int64_t rollout_length = 50;        // T
  std::int64_t planning_neighbours = 10;   // M
  std::int64_t value_neighbours = 5;       // k
  double temperature = 1e-5;
  TraceMode trace_mode = TraceMode::kTcp;
  KernelParams kernel{};
  bool planning = true;
  double learning_rate = 1e-4;
  std::int64_t batch_size = 48;
  std::int64_t replay_capacity = 50000;
  std::int64_t value_buffer_size = 2000;
  std::int64_t target_period = 50;       // in train steps
  std::int64_t warmup_steps = 5000;
  std::int64_t replay_period = 4;        // env steps per train step
  std::vector<std::int64_t> hidden_layers{256};
  std::int64_t embedding_dim = 64;
  std::int64_t lambda_anneal_steps = 0;  // 0: no annealing
  std::int64_t parallel_envs = 1;
  // Convolutional encoder shape; recorded but unused by the MLP network.
  std::vector<std::int64_t> filter_sizes{8, 4, 3};
  std::vector<std::int64_t> filter_strides{4, 2, 1};
  std::vector<std::int64_t> channels{16, 32, 32};

  std::int64_t epsilon_decay() const {
    return epsilon_decay_steps < 0 ? warmup_steps : epsilon_decay_steps;
  }

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (insert_period < 1) throw ConfigError("Insert period must be at least 1");
    if (rollout_length < 1) throw ConfigError("T must be at least 1");
    if (planning_neighbours < 1) throw ConfigError("M must be at least 1");
    if (value_neighbours < 1) throw ConfigError("k must be at least 1");
    if (!(temperature >= 0.0)) throw ConfigError("Temperature must be non-negative");
    if (batch_size < 1) throw ConfigError("Training batch size must be at least 1");
    if (replay_capacity < 1) throw ConfigError("Replay buffer capacity must be at least 1");
    if (value_buffer_size < 1) throw ConfigError("Value buffer size must be at least 1");
    if (target_period < 1) throw ConfigError("Target network period must be at least 1");
    if (warmup_steps < 0) throw ConfigError("No training period must be non-negative");
    if (replay_period < 1) throw ConfigError("replay_period must be at least 1");
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be at least 1");
    if (lambda_anneal_steps < 0) throw ConfigError("lambda_anneal_steps must be non-negative");
    if (parallel_envs < 1) throw ConfigError("Number of parallel environments must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("Learning rate must be positive");
    for (auto h : hidden_layers) {
      if (h < 1) throw ConfigError("hidden layer widths must be positive");
    }
    kernel.validate();
  }
};

struct ExperimentConfig {
  AgentConfig agent;
  std::string preset = "one-coin";
  std::int64_t n_coins = 1;
  std::int64_t total_steps = 300000;
  std::int64_t eval_period = 5000;  // env steps between metrics rows
  std::int64_t seeds = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  std::string map_path;  // empty: open 5 x 13 field
  std::string observation = "symbolic";
  std::int64_t max_episode_steps = 500;
  std::int64_t eval_episodes = 200;
  double eval_epsilon = 0.0;
  std::vector<double> lambdas{0.0, 0.2, 0.4, 0.6};  // sweep and evaluation grid

  void validate() const {
    agent.validate();
    if (n_coins < 1) throw ConfigError("n_coins must be at least 1");
    if (total_steps < agent.warmup_steps) throw ConfigError("total_steps must be >= No training period");
    if (eval_period < 1) throw ConfigError("eval_period must be at least 1");
    if (seeds < 1) throw ConfigError("seeds must be at least 1");
    if (max_episode_steps < 1) throw ConfigError("max_episode_steps must be positive");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
    if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) throw ConfigError("eval_epsilon must lie in [0, 1]");
    if (observation != "symbolic" && observation != "rgb") {
      throw ConfigError("observation must be 'symbolic' or 'rgb'");
    }
    for (double l : lambdas) {
      if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambdas entries must lie in [0, 1]");
    }
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("bad value for '" + key + "': '" + text + "'");
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + text + "'");
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out + "]";
}

template <typename T>
std::vector<T> parse_list(const std::string& key, std::string text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    throw ConfigError("bad list for '" + key + "': expected [a, b, ...]");
  }
  std::vector<T> out;
  std::istringstream is(text.substr(1, text.size() - 2));
  for (std::string item; std::getline(is, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(std::string key, T ExperimentConfig::*member) {
  return {key,
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

template <typename T>
Field agent_number(std::string key, T AgentConfig::*member) {
  return {key,
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.agent.*member);
            else return std::to_string(c.agent.*member);
          },
          [member, key](ExperimentConfig& c, const std::string& v) {
            c.agent.*member = parse_number<T>(key, v);
          }};
}

template <typename T>
Field agent_list(std::string key, std::vector<T> AgentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return format_list(c.agent.*member); },
          [member, key](ExperimentConfig& c, const std::string& v) {
            c.agent.*member = parse_list<T>(key, v);
          }};
}

template <typename T>
Field kernel_number(std::string key, T KernelParams::*member) {
  return {key,
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.agent.kernel.*member);
            else return std::to_string(c.agent.kernel.*member);
          },
          [member, key](ExperimentConfig& c, const std::string& v) {
            c.agent.kernel.*member = parse_number<T>(key, v);
          }};
}

/// Serialisation order. Hyperparameter-table names are used verbatim as keys.
inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"preset", [](const ExperimentConfig& c) { return c.preset; },
                 [](ExperimentConfig& c, const std::string& v) { c.preset = v; }});
    f.push_back(agent_number("Temperature", &AgentConfig::temperature));
    f.push_back(agent_number("Insert period", &AgentConfig::insert_period));
    f.push_back(agent_number("k", &AgentConfig::value_neighbours));
    f.push_back(agent_number("λ", &AgentConfig::lambda));
    f.push_back(agent_number("M", &AgentConfig::planning_neighbours));
    f.push_back(agent_number("T", &AgentConfig::rollout_length));
    f.push_back(agent_number("No training period", &AgentConfig::warmup_steps));
    f.push_back(agent_number("Learning rate", &AgentConfig::learning_rate));
    f.push_back(agent_number("Replay buffer capacity", &AgentConfig::replay_capacity));
    f.push_back(agent_number("Value buffer size", &AgentConfig::value_buffer_size));
    f.push_back(agent_number("Training batch size", &AgentConfig::batch_size));
    f.push_back(agent_number("Target network period", &AgentConfig::target_period));
    f.push_back(agent_number("Number of parallel environments", &AgentConfig::parallel_envs));
    f.push_back(agent_list("Filter sizes", &AgentConfig::filter_sizes));
    f.push_back(agent_list("Filter strides", &AgentConfig::filter_strides));
    f.push_back(agent_list("Channels", &AgentConfig::channels));
    f.push_back(agent_list("Number of fully connected activations", &AgentConfig::hidden_layers));
    f.push_back(agent_number("gamma", &AgentConfig::gamma));
    f.push_back(agent_number("embedding_dim", &AgentConfig::embedding_dim));
    f.push_back(agent_number("replay_period", &AgentConfig::replay_period));
    f.push_back(agent_number("epsilon_start", &AgentConfig::epsilon_start));
    f.push_back(agent_number("epsilon_end", &AgentConfig::epsilon_end));
    f.push_back(agent_number("epsilon_decay_steps", &AgentConfig::epsilon_decay_steps));
    f.push_back({"trace_mode", [](const ExperimentConfig& c) { return to_string(c.agent.trace_mode); },
                 [](ExperimentConfig& c, const std::string& v) { c.agent.trace_mode = parse_trace_mode(v); }});
    f.push_back(kernel_number("kernel_bandwidth", &KernelParams::bandwidth));
    f.push_back(kernel_number("pseudo_similarity", &KernelParams::pseudo_similarity));
    f.push_back(kernel_number("kernel_max_iters", &KernelParams::max_iters));
    f.push_back(kernel_number("kernel_tolerance", &KernelParams::convergence_tol));
    f.push_back({"planning", [](const ExperimentConfig& c) { return std::string(c.agent.planning ? "true" : "false"); },
                 [](ExperimentConfig& c, const std::string& v) { c.agent.planning = parse_bool("planning", v); }});
    f.push_back(agent_number("lambda_anneal_steps", &AgentConfig::lambda_anneal_steps));
    f.push_back(number_field("n_coins", &ExperimentConfig::n_coins));
    f.push_back(number_field("total_steps", &ExperimentConfig::total_steps));
    f.push_back(number_field("eval_period", &ExperimentConfig::eval_period));
    f.push_back(number_field("seeds", &ExperimentConfig::seeds));
    f.push_back(number_field("seed", &ExperimentConfig::seed));
    f.push_back({"output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
                 [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; }});
    f.push_back({"map", [](const ExperimentConfig& c) { return c.map_path; },
                 [](ExperimentConfig& c, const std::string& v) { c.map_path = v; }});
    f.push_back({"observation", [](const ExperimentConfig& c) { return c.observation; },
                 [](ExperimentConfig& c, const std::string& v) { c.observation = v; }});
    f.push_back(number_field("max_episode_steps", &ExperimentConfig::max_episode_steps));
    f.push_back(number_field("eval_episodes", &ExperimentConfig::eval_episodes));
    f.push_back(number_field("eval_epsilon", &ExperimentConfig::eval_epsilon));
    f.push_back({"lambdas", [](const ExperimentConfig& c) { return format_list(c.lambdas); },
                 [](ExperimentConfig& c, const std::string& v) { c.lambdas = parse_list<double>("lambdas", v); }});
    return f;
  }();
  return table;
}

}  // namespace config_detail

/// Applies one key=value assignment. "lambda" is accepted for "λ".
inline void set_config_value(ExperimentConfig& cfg, std::string key, const std::string& value) {
  if (key == "lambda") key = "λ";
  for (const auto& f : config_detail::fields()) {
    if (f.key == key) {
      f.set(cfg, config_detail::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Parses flat key=value text with '#' comments on top of base.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  std::istringstream is{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = config_detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(base, config_detail::trim(body.substr(0, eq)), body.substr(eq + 1));
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : config_detail::fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

/// Named starting points. "one-coin" holds the desk-scale defaults.
inline ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig cfg;
  cfg.preset = std::string(name);
  if (name == "one-coin" || name == "default") {
    cfg.preset = "one-coin";
  } else if (name == "two-coin") {
    cfg.n_coins = 2;
  } else if (name == "smoke") {
    cfg.total_steps = 3000;
    cfg.eval_period = 500;
    cfg.eval_episodes = 10;
    cfg.agent.warmup_steps = 500;
    cfg.agent.replay_capacity = 5000;
    cfg.agent.value_buffer_size = 500;
    cfg.agent.hidden_layers = {32};
    cfg.agent.embedding_dim = 16;
    cfg.agent.batch_size = 16;
    cfg.agent.epsilon_decay_steps = 2000;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (one-coin, two-coin, smoke)");
  }
  return cfg;
}

}  // namespace eva

#endif  // EVA_CONFIG_HPP_
