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

#ifndef EVA_HARNESS_HPP_
#define EVA_HARNESS_HPP_

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eva/agent.hpp"
#include "eva/checkpoint.hpp"
#include "eva/config.hpp"
#include "eva/gridworld.hpp"

namespace eva {

/// One learning-curve sample.
struct MetricsRow {
  std::uint64_t env_step = 0;
  double episode_return = std::numeric_limits<double>::quiet_NaN();  // mean of last 100 episodes
  double loss = std::numeric_limits<double>::quiet_NaN();            // mean since previous row
  std::uint64_t planning_calls = 0;
  double value_hit_rate = 0.0;  // since previous row
  double lambda = 0.0;
  std::uint64_t episodes = 0;
  double epsilon = 0.0;
};

inline constexpr std::string_view kMetricsHeader =
    "env_step,episode_return,loss,planning_calls,value_hit_rate,lambda,episodes,epsilon";

inline std::string format_metrics_row(const MetricsRow& r) {
  using config_detail::format_double;
  std::string out = std::to_string(r.env_step);
  out += ',' + format_double(r.episode_return);
  out += ',' + format_double(r.loss);
  out += ',' + std::to_string(r.planning_calls);
  out += ',' + format_double(r.value_hit_rate);
  out += ',' + format_double(r.lambda);
  out += ',' + std::to_string(r.episodes);
  out += ',' + format_double(r.epsilon);
  return out;
}

/// Header-first, append-only CSV with a strictly increasing env_step column.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) throw Error("cannot write metrics file " + path.string());
    out_ << kMetricsHeader << '\n';
  }

  void append(const MetricsRow& row) {
    if (last_step_ && row.env_step <= *last_step_) {
      throw Error("metrics rows must have strictly increasing env_step");
    }
    last_step_ = row.env_step;
    out_ << format_metrics_row(row) << '\n';
    out_.flush();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::optional<std::uint64_t> last_step_;
};

/// One-pass reader for metrics files written by MetricsWriter.
inline std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw Error("metrics file " + path.string() + " has an unexpected header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(is, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw Error("malformed metrics row: " + line);
    MetricsRow r;
    r.env_step = std::stoull(cells[0]);
    r.episode_return = std::stod(cells[1]);
    r.loss = std::stod(cells[2]);
    r.planning_calls = std::stoull(cells[3]);
    r.value_hit_rate = std::stod(cells[4]);
    r.lambda = std::stod(cells[5]);
    r.episodes = std::stoull(cells[6]);
    r.epsilon = std::stod(cells[7]);
    if (!rows.empty() && r.env_step <= rows.back().env_step) {
      throw Error("metrics file " + path.string() + " has non-increasing env_step at " + cells[0]);
    }
    rows.push_back(r);
  }
  return rows;
}

struct EpisodeRecord {
  std::uint64_t end_step = 0;
  double total_return = 0.0;
  std::uint32_t length = 0;
};

/// Agent plus its environments: everything needed to continue a run exactly.
class Session {
 public:
  static constexpr std::size_t kReturnWindow = 100;

  Session(const ExperimentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed), map_(make_map(cfg)),
        agent_(cfg.agent, observation_size(map_), GridWorld::num_actions(), seed) {
    cfg_.validate();
    for (std::int64_t i = 0; i < cfg_.agent.parallel_envs; ++i) {
      Actor actor{make_env(), {}, {}, 0, 0, 0.0};
      std::seed_seq seq{seed, std::uint64_t{0x656e76}, std::uint64_t(i)};
      actor.rng.seed(seq);
      actors_.push_back(std::move(actor));
      start_episode(actors_.back());
    }
  }

  const ExperimentConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  Agent& agent() { return agent_; }
  const Agent& agent() const { return agent_; }
  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  const GridWorld& env(std::size_t i = 0) const { return actors_.at(i).env; }

  /// Mean return of the last n completed episodes (NaN before any).
  double trailing_return(std::size_t n = kReturnWindow) const {
    if (episodes_.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t k = std::min(n, episodes_.size());
    double s = 0.0;
    for (std::size_t i = episodes_.size() - k; i < episodes_.size(); ++i) s += episodes_[i].total_return;
    return s / static_cast<double>(k);
  }

  /// Advances every environment in lockstep until steps more env steps have
  /// been taken. A row is emitted whenever the global step count hits a
  /// multiple of the eval period. on_action sees every chosen action.
  void run(std::uint64_t steps, MetricsWriter* metrics = nullptr,
           const std::function<void(int)>& on_action = {}) {
    const std::uint64_t target = agent_.stats().env_steps + steps;
    const std::size_t n = actors_.size();
    std::vector<float> batch;
    while (agent_.stats().env_steps < target) {
      std::vector<Decision> decisions;
      if (n == 1) {
        decisions.push_back(agent_.act(actors_[0].obs));
      } else {
        batch.clear();
        for (const auto& a : actors_) batch.insert(batch.end(), a.obs.begin(), a.obs.end());
        decisions = agent_.act_batch(batch, n);
      }
      for (std::size_t i = 0; i < n && agent_.stats().env_steps < target; ++i) {
        auto& actor = actors_[i];
        auto& d = decisions[i];
        if (on_action) on_action(d.action);
        auto res = actor.env.step(d.action);
        Transition t;
        t.obs = std::move(actor.obs);
        t.action = d.action;
        t.reward = res.reward;
        t.embedding = std::move(d.embedding);
        t.episode_id = actor.episode_id;
        t.step_index = actor.step;
        t.terminal = res.terminal;
        const auto train_before = agent_.stats().train_steps;
        agent_.observe(std::move(t));
        if (agent_.stats().train_steps != train_before) {
          loss_sum_ += agent_.stats().last_loss;
          ++loss_count_;
        }
        actor.ret += res.reward;
        ++actor.step;
        actor.obs = std::move(res.obs);
        if (res.done) {
          episodes_.push_back({agent_.stats().env_steps, actor.ret, actor.step});
          start_episode(actor);
        }
        if (metrics && agent_.stats().env_steps % std::uint64_t(cfg_.eval_period) == 0) {
          metrics->append(make_row());
        }
      }
    }
  }

  MetricsRow make_row() {
    MetricsRow r;
    const auto& s = agent_.stats();
    r.env_step = s.env_steps;
    r.episode_return = trailing_return();
    r.loss = loss_count_ ? loss_sum_ / static_cast<double>(loss_count_)
                         : std::numeric_limits<double>::quiet_NaN();
    r.planning_calls = s.planning_calls;
    const auto dq = s.value_queries - row_queries_;
    r.value_hit_rate = dq ? static_cast<double>(s.value_hits - row_hits_) / static_cast<double>(dq) : 0.0;
    r.lambda = agent_.lambda();
    r.episodes = episodes_.size();
    r.epsilon = agent_.epsilon();
    loss_sum_ = 0.0;
    loss_count_ = 0;
    row_queries_ = s.value_queries;
    row_hits_ = s.value_hits;
    return r;
  }

  // -- checkpointing --------------------------------------------------------

  std::vector<std::uint8_t> serialize(bool include_value_buffer = true) const {
    CheckpointWriter out;
    {
      ByteWriter w;
      w.put_string(format_config(cfg_));
      out.add(chunk::kConfig, w.bytes());
    }
    agent_.write_chunks(out, include_value_buffer);
    {
      ByteWriter w;
      w.put<std::uint64_t>(seed_);
      w.put_string(map_.to_string());
      w.put<std::uint64_t>(next_episode_);
      w.put<double>(loss_sum_);
      w.put<std::uint64_t>(loss_count_);
      w.put<std::uint64_t>(row_queries_);
      w.put<std::uint64_t>(row_hits_);
      w.put<std::uint64_t>(actors_.size());
      for (const auto& a : actors_) {
        a.env.write(w);
        w.put_rng(a.rng);
        w.put<std::uint64_t>(a.episode_id);
        w.put<std::uint32_t>(a.step);
        w.put<double>(a.ret);
      }
      w.put<std::uint64_t>(episodes_.size());
      for (const auto& e : episodes_) {
        w.put<std::uint64_t>(e.end_step);
        w.put<double>(e.total_return);
        w.put<std::uint32_t>(e.length);
      }
      out.add(chunk::kSession, w.bytes());
    }
    return out.bytes();
  }

  void save(const std::filesystem::path& path, bool include_value_buffer = true) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto bytes = serialize(include_value_buffer);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("failed writing checkpoint " + path.string());
  }

  static Session deserialize(const CheckpointReader& in) {
    auto conf = in.open(chunk::kConfig);
    const auto cfg = parse_config(conf.get_string());
    conf.expect_done();
    auto sess = in.open(chunk::kSession);
    const auto seed = sess.get<std::uint64_t>();
    const auto map = GridMap::parse(sess.get_string());
    Session s(cfg, map, Agent::read_chunks(in, cfg.agent), seed);
    s.next_episode_ = sess.get<std::uint64_t>();
    s.loss_sum_ = sess.get<double>();
    s.loss_count_ = sess.get<std::uint64_t>();
    s.row_queries_ = sess.get<std::uint64_t>();
    s.row_hits_ = sess.get<std::uint64_t>();
    const auto n = sess.get<std::uint64_t>();
    if (n != std::uint64_t(cfg.agent.parallel_envs)) throw CheckpointError("session: actor count mismatch");
    for (std::uint64_t i = 0; i < n; ++i) {
      Actor a{s.make_env(), {}, {}, 0, 0, 0.0};
      a.env.read(sess);
      sess.get_rng(a.rng);
      a.episode_id = sess.get<std::uint64_t>();
      a.step = sess.get<std::uint32_t>();
      a.ret = sess.get<double>();
      a.obs = a.env.observe();
      s.actors_.push_back(std::move(a));
    }
    const auto n_episodes = sess.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_episodes; ++i) {
      EpisodeRecord e;
      e.end_step = sess.get<std::uint64_t>();
      e.total_return = sess.get<double>();
      e.length = sess.get<std::uint32_t>();
      s.episodes_.push_back(e);
    }
    sess.expect_done();
    return s;
  }

  static Session load(const std::filesystem::path& path) {
    return deserialize(CheckpointReader::load(path));
  }

 private:
  struct Actor {
    GridWorld env;
    std::mt19937_64 rng;
    Observation obs;
    std::uint64_t episode_id;
    std::uint32_t step;
    double ret;
  };

  Session(const ExperimentConfig& cfg, GridMap map, Agent agent, std::uint64_t seed)
      : cfg_(cfg), seed_(seed), map_(std::move(map)), agent_(std::move(agent)) {}

  static GridMap make_map(const ExperimentConfig& cfg) {
    return cfg.map_path.empty() ? GridMap::open_field() : GridMap::load(cfg.map_path);
  }

  static std::size_t observation_size(const GridMap& map) { return 3 * map.cells(); }

  GridWorld make_env() const {
    const auto mode = cfg_.observation == "rgb" ? ObservationMode::kRgb : ObservationMode::kSymbolic;
    return GridWorld(map_, mode, int(cfg_.max_episode_steps));
  }

  void start_episode(Actor& a) {
    a.obs = a.env.reset(a.rng, int(cfg_.n_coins));
    a.episode_id = next_episode_++;
    a.step = 0;
    a.ret = 0.0;
  }

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  GridMap map_;
  Agent agent_;
  std::vector<Actor> actors_;
  std::vector<EpisodeRecord> episodes_;
  std::uint64_t next_episode_ = 0;
  double loss_sum_ = 0.0;
  std::uint64_t loss_count_ = 0;
  std::uint64_t row_queries_ = 0;
  std::uint64_t row_hits_ = 0;
};

// ---------------------------------------------------------------------------
// Experiment protocols.

struct RunResult {
  std::filesystem::path metrics;
  std::filesystem::path checkpoint;
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;
  bool diverged = false;
  std::string diagnostic;
  double final_return = std::numeric_limits<double>::quiet_NaN();
};

/// Trains one seed for cfg.total_steps and writes metrics.csv and
/// checkpoint.eva under out_dir. A non-finite loss is rethrown unless
/// tolerate_divergence is set, in which case the run stops and is flagged.
inline RunResult run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                              const std::filesystem::path& out_dir, bool tolerate_divergence = false) {
  RunResult result;
  result.metrics = out_dir / "metrics.csv";
  result.checkpoint = out_dir / "checkpoint.eva";
  Session session(cfg, seed);
  MetricsWriter metrics(result.metrics);
  try {
    session.run(std::uint64_t(cfg.total_steps), &metrics);
  } catch (const TrainingDivergence& e) {
    if (!tolerate_divergence) {
      throw TrainingDivergence(std::string(e.what()) + " at env step " +
                               std::to_string(session.agent().stats().env_steps));
    }
    result.diverged = true;
    result.diagnostic = e.what();
  }
  if (!result.diverged) session.save(result.checkpoint);
  result.rows = read_metrics(result.metrics);
  result.episodes = session.episodes();
  result.final_return = session.trailing_return();
  return result;
}

/// Continues a saved run while lambda decays linearly to zero over horizon
/// steps, then runs extra steps at lambda = 0.
inline RunResult run_anneal(const std::filesystem::path& checkpoint, std::uint64_t horizon,
                            std::uint64_t extra_steps, const std::filesystem::path& out_dir) {
  RunResult result;
  result.metrics = out_dir / "metrics.csv";
  result.checkpoint = out_dir / "checkpoint.eva";
  auto session = Session::load(checkpoint);
  session.agent().set_lambda_schedule(horizon);
  MetricsWriter metrics(result.metrics);
  session.run(horizon + extra_steps, &metrics);
  session.save(result.checkpoint);
  result.rows = read_metrics(result.metrics);
  result.episodes = session.episodes();
  result.final_return = session.trailing_return();
  return result;
}

struct EvalRow {
  double lambda = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::vector<double> returns;
};

inline EvalRow summarize(double lambda, std::vector<double> returns) {
  EvalRow row;
  row.lambda = lambda;
  const double n = static_cast<double>(returns.size());
  row.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : returns) ss += (r - row.mean) * (r - row.mean);
  row.stderr_ = returns.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  row.returns = std::move(returns);
  return row;
}

/// Plays fresh episodes with frozen weights and replay memory for each lambda.
/// Every lambda row sees the same sequence of start states.
inline std::vector<EvalRow> run_single_episode_eval(const std::filesystem::path& checkpoint,
                                                    const std::vector<double>& lambdas,
                                                    std::size_t episodes, std::uint64_t seed,
                                                    double epsilon = 0.0) {
  const auto reader = CheckpointReader::load(checkpoint);
  if (!reader.has(chunk::kReplay)) throw CheckpointError("checkpoint has no replay buffer");
  auto session = Session::deserialize(reader);
  if (session.agent().replay().empty()) throw CheckpointError("checkpoint replay buffer is empty");
  const auto& cfg = session.config();
  auto& agent = session.agent();
  agent.set_frozen(true);
  const GridMap map = session.env().map();
  const auto mode = cfg.observation == "rgb" ? ObservationMode::kRgb : ObservationMode::kSymbolic;

  std::vector<EvalRow> rows;
  for (double lambda : lambdas) {
    agent.set_lambda(lambda);
    std::seed_seq seq{seed, std::uint64_t{0x6576616c}};
    std::mt19937_64 env_rng(seq);
    GridWorld env(map, mode, int(cfg.max_episode_steps));
    std::vector<double> returns;
    for (std::size_t e = 0; e < episodes; ++e) {
      agent.begin_frozen_episode();
      auto obs = env.reset(env_rng, int(cfg.n_coins));
      double ret = 0.0;
      for (std::uint32_t step = 0;; ++step) {
        auto d = agent.act(obs, epsilon);
        auto res = env.step(d.action);
        ret += res.reward;
        agent.observe(Transition{std::move(obs), d.action, res.reward, std::move(d.embedding),
                                 std::numeric_limits<std::uint64_t>::max(), step, res.terminal});
        obs = std::move(res.obs);
        if (res.done) break;
      }
      returns.push_back(ret);
    }
    rows.push_back(summarize(lambda, std::move(returns)));
  }
  return rows;
}

struct AblationResult {
  TraceMode mode;
  std::vector<RunResult> runs;  // one per seed
};

/// Training runs differing only in the trace computation, with shared seeds.
/// Divergence stops a run and is recorded instead of aborting the ablation.
inline std::vector<AblationResult> run_trace_ablation(const ExperimentConfig& cfg,
                                                      const std::filesystem::path& out_dir) {
  std::vector<AblationResult> out;
  for (auto mode : {TraceMode::kNStep, TraceMode::kTcp, TraceMode::kKbrl}) {
    ExperimentConfig c = cfg;
    c.agent.trace_mode = mode;
    AblationResult res{mode, {}};
    for (std::int64_t k = 0; k < cfg.seeds; ++k) {
      const auto seed = cfg.seed + std::uint64_t(k);
      res.runs.push_back(run_training(c, seed, out_dir / to_string(mode) / ("seed" + std::to_string(seed)), true));
    }
    out.push_back(std::move(res));
  }
  return out;
}

struct SweepResult {
  double lambda = 0.0;
  std::vector<RunResult> runs;  // one per seed
};

/// Training runs over cfg.lambdas with shared seeds; lambda = 0 is the DQN baseline.
inline std::vector<SweepResult> sweep_lambda(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::vector<SweepResult> out;
  for (double lambda : cfg.lambdas) {
    ExperimentConfig c = cfg;
    c.agent.lambda = lambda;
    SweepResult res{lambda, {}};
    for (std::int64_t k = 0; k < cfg.seeds; ++k) {
      const auto seed = cfg.seed + std::uint64_t(k);
      res.runs.push_back(
          run_training(c, seed, out_dir / ("lambda" + config_detail::format_double(lambda)) / ("seed" + std::to_string(seed))));
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace eva

#endif  // EVA_HARNESS_HPP_
