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

#ifndef EVA_TRACE_COMPUTATION_HPP_
#define EVA_TRACE_COMPUTATION_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eva/approximator.hpp"
#include "eva/common.hpp"
#include "eva/nn_index.hpp"
#include "eva/replay_memory.hpp"

namespace eva {

/// Per-step action values produced by planning over a trajectory.
struct QTable {
  std::size_t steps = 0;
  std::size_t actions = 0;
  std::vector<double> q;  // steps x actions, row-major
  std::vector<double> v;  // per-step state value

  QTable() = default;
  QTable(std::size_t n, std::size_t a) : steps(n), actions(a), q(n * a, 0.0), v(n, 0.0) {}

  std::span<double> row(std::size_t t) { return {q.data() + t * actions, actions}; }
  std::span<const double> row(std::size_t t) const { return {q.data() + t * actions, actions}; }
  double& at(std::size_t t, std::size_t a) { return q[t * actions + a]; }
  double at(std::size_t t, std::size_t a) const { return q[t * actions + a]; }

  friend bool operator==(const QTable&, const QTable&) = default;
};

/// Parametric action values for every step of a trajectory (steps x actions).
inline std::vector<double> parametric_values(const TrajectorySlice& traj, const QFunction& q) {
  const std::size_t n = traj.size();
  std::vector<float> obs;
  obs.reserve(n * q.input_dim());
  for (const auto& t : traj.transitions) obs.insert(obs.end(), t.obs.begin(), t.obs.end());
  std::vector<double> out(n * q.num_actions());
  q.evaluate(obs, n, out, {});
  return out;
}

namespace detail {

enum class Backup { kOnTrajectory, kImprove };

// Backward recursion shared by the n-step and trajectory-centric planners.
// A truncated slice ends in a bootstrap state valued by max_a Q_theta; a
// terminal slice ends with a zero continuation value.
inline QTable backward_trace(const TrajectorySlice& traj, std::span<const double> q_theta,
                             std::size_t num_actions, double gamma, Backup backup) {
  if (traj.empty()) throw Error("trace computation: empty trajectory");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("trace computation: gamma must lie in [0, 1]");
  const std::size_t n = traj.size();
  check_dimension("trace computation parametric values", n * num_actions, q_theta.size());
  const auto& last = traj.transitions.back();
  if (!traj.truncated && !last.terminal) {
    throw Error("trace computation: untruncated trajectory must end at a terminal step");
  }

  QTable table(n, num_actions);
  auto theta_row = [&](std::size_t t) { return q_theta.subspan(t * num_actions, num_actions); };

  auto fill_row = [&](std::size_t t, double on_trajectory) {
    const auto a_t = static_cast<std::size_t>(traj.transitions[t].action);
    if (a_t >= num_actions) throw Error("trace computation: action out of range");
    auto row = table.row(t);
    const auto theta = theta_row(t);
    std::copy(theta.begin(), theta.end(), row.begin());
    row[a_t] = on_trajectory;
    table.v[t] = backup == Backup::kImprove ? max_value<double>(row) : on_trajectory;
  };

  std::size_t t = n - 1;
  if (traj.truncated) {
    const auto theta = theta_row(t);
    std::copy(theta.begin(), theta.end(), table.row(t).begin());
    table.v[t] = max_value<double>(theta);
  } else {
    fill_row(t, static_cast<double>(last.reward));
  }
  while (t-- > 0) {
    fill_row(t, static_cast<double>(traj.transitions[t].reward) + gamma * table.v[t + 1]);
  }
  return table;
}

}  // namespace detail

/// n-step returns along the trajectory; untaken actions keep Q_theta.
inline QTable nstep_trace(const TrajectorySlice& traj, std::span<const double> q_theta,
                          std::size_t num_actions, double gamma) {
  return detail::backward_trace(traj, q_theta, num_actions, gamma, detail::Backup::kOnTrajectory);
}

inline QTable nstep_trace(const TrajectorySlice& traj, const QFunction& q, double gamma) {
  if (traj.empty()) throw Error("trace computation: empty trajectory");
  return nstep_trace(traj, parametric_values(traj, q), q.num_actions(), gamma);
}

/// Trajectory-centric planning: the backward recursion applies a max over the
/// on-trajectory return and Q_theta for counterfactual actions at every step.
inline QTable tcp_trace(const TrajectorySlice& traj, std::span<const double> q_theta,
                        std::size_t num_actions, double gamma) {
  return detail::backward_trace(traj, q_theta, num_actions, gamma, detail::Backup::kImprove);
}

inline QTable tcp_trace(const TrajectorySlice& traj, const QFunction& q, double gamma) {
  if (traj.empty()) throw Error("trace computation: empty trajectory");
  return tcp_trace(traj, parametric_values(traj, q), q.num_actions(), gamma);
}

// ---------------------------------------------------------------------------
// Kernel-based planning with an absorbing pseudo-state.

struct KernelParams {
  double bandwidth = 1e-4;           // b in exp(-|x - y|^2 / b)
  double pseudo_similarity = 1e-2;   // C, unnormalised similarity of every state to the pseudo-state
  int max_iters = 50;
  double convergence_tol = 1e-6;

  void validate() const {
    if (!(bandwidth > 0.0)) throw Error("KernelParams: bandwidth must be positive");
    if (!(pseudo_similarity >= 0.0)) throw Error("KernelParams: pseudo similarity must be >= 0");
    if (max_iters < 1) throw Error("KernelParams: max_iters must be positive");
    if (!(convergence_tol > 0.0)) throw Error("KernelParams: convergence_tol must be positive");
  }
};

/// Gaussian similarities below this are treated as exactly zero.
inline constexpr double kSimilarityFloor = 1e-30;

/// One stored experience tuple (s, a, r, s') in embedding space. result_q holds
/// Q_theta(s', .) and is only needed for non-terminal tuples.
struct KernelTransition {
  Embedding origin;
  int action = 0;
  double reward = 0.0;
  bool terminal = false;
  Embedding result;
  std::vector<double> result_q;
};

/// Normalised weights from one evaluated state to the origins of S_a and the pseudo-state.
struct KernelWeights {
  std::vector<std::size_t> indices;  // transitions with non-zero weight
  std::vector<double> weights;
  double pseudo = 0.0;

  double total() const {
    double s = pseudo;
    for (double w : weights) s += w;
    return s;
  }
};

struct KbrlSolution {
  std::vector<double> values;  // V(s') per transition; 0 at terminal tuples
  int iterations = 0;
  bool converged = false;
  std::vector<double> deltas;  // max-norm change per iteration
};

struct KbrlResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> deltas;
};

/// Kernel-based value iteration over stored transitions. Resultant states are
/// mapped back onto origin states by a normalised Gaussian kernel; the
/// pseudo-state absorbs weight C and is valued by Q_theta at the state being
/// evaluated.
class KernelPlanner {
 public:
  KernelPlanner(std::vector<KernelTransition> transitions, std::size_t num_actions,
                KernelParams params, double gamma)
      : transitions_(std::move(transitions)),
        num_actions_(num_actions),
        params_(params),
        gamma_(gamma),
        by_action_(num_actions) {
    params_.validate();
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("KernelPlanner: gamma must lie in [0, 1]");
    for (std::size_t k = 0; k < transitions_.size(); ++k) {
      const auto& t = transitions_[k];
      if (t.action < 0 || static_cast<std::size_t>(t.action) >= num_actions) {
        throw Error("KernelPlanner: action out of range");
      }
      check_dimension("KernelPlanner origin", transitions_.front().origin.size(), t.origin.size());
      if (!t.terminal) {
        check_dimension("KernelPlanner result", t.origin.size(), t.result.size());
        check_dimension("KernelPlanner result values", num_actions, t.result_q.size());
      }
      by_action_[static_cast<std::size_t>(t.action)].push_back(k);
    }
  }

  std::size_t size() const { return transitions_.size(); }
  const std::vector<KernelTransition>& transitions() const { return transitions_; }

  KernelWeights weights(std::span<const float> x, std::size_t action) const {
    if (action >= num_actions_) throw Error("KernelPlanner::weights: action out of range");
    KernelWeights w;
    double total = params_.pseudo_similarity;
    for (auto k : by_action_[action]) {
      const double d = squared_distance(x, transitions_[k].origin);
      const double sim = std::exp(-d / params_.bandwidth);
      if (sim < kSimilarityFloor) continue;
      w.indices.push_back(k);
      w.weights.push_back(sim);
      total += sim;
    }
    if (!(total > 0.0)) {
      throw Error("KernelPlanner: no similar data for action " + std::to_string(action) +
                  " and zero pseudo-state similarity");
    }
    for (double& v : w.weights) v /= total;
    w.pseudo = params_.pseudo_similarity / total;
    return w;
  }

  /// Value iteration from V = 0 until the max change drops below tolerance or
  /// max_iters is reached.
  KbrlSolution solve() const {
    const std::size_t n = transitions_.size();
    // Precomputed kernel rows for each non-terminal resultant state and action.
    std::vector<std::vector<KernelWeights>> rows(n);
    std::vector<std::vector<double>> pseudo_terms(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& t = transitions_[j];
      if (t.terminal) continue;
      rows[j].reserve(num_actions_);
      for (std::size_t a = 0; a < num_actions_; ++a) {
        rows[j].push_back(weights(t.result, a));
        pseudo_terms[j].push_back(rows[j].back().pseudo * t.result_q[a]);
      }
    }

    KbrlSolution sol;
    sol.values.assign(n, 0.0);
    std::vector<double> next(n, 0.0);
    for (int it = 1; it <= params_.max_iters; ++it) {
      double delta = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (transitions_[j].terminal) continue;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < num_actions_; ++a) {
          best = std::max(best, backup(rows[j][a], sol.values) + pseudo_terms[j][a]);
        }
        next[j] = best;
        delta = std::max(delta, std::abs(best - sol.values[j]));
      }
      sol.values.swap(next);
      sol.iterations = it;
      sol.deltas.push_back(delta);
      if (delta < params_.convergence_tol) {
        sol.converged = true;
        break;
      }
    }
    return sol;
  }

  /// Q(x, a) = sum_k w_k [r_k + gamma V(s'_k)] + w_pseudo Q_theta(x, a).
  double q_value(const KbrlSolution& sol, std::span<const float> x,
                 std::span<const double> q_theta_x, std::size_t action) const {
    check_dimension("KernelPlanner::q_value parametric values", num_actions_, q_theta_x.size());
    const auto w = weights(x, action);
    return backup(w, sol.values) + w.pseudo * q_theta_x[action];
  }

 private:
  double backup(const KernelWeights& w, const std::vector<double>& values) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.indices.size(); ++i) {
      const auto k = w.indices[i];
      const auto& t = transitions_[k];
      s += w.weights[i] * (t.reward + (t.terminal ? 0.0 : gamma_ * values[k]));
    }
    return s;
  }

  std::vector<KernelTransition> transitions_;
  std::size_t num_actions_;
  KernelParams params_;
  double gamma_;
  std::vector<std::vector<std::size_t>> by_action_;
};

/// Plans over the stores and evaluates the query state-action pair.
inline KbrlResult kbrl_plan(std::vector<KernelTransition> stores, std::size_t num_actions,
                            const KernelParams& params, double gamma,
                            std::span<const float> query, std::span<const double> q_theta_query,
                            std::size_t query_action) {
  KernelPlanner planner(std::move(stores), num_actions, params, gamma);
  const auto sol = planner.solve();
  return {planner.q_value(sol, query, q_theta_query, query_action), sol.iterations, sol.converged,
          sol.deltas};
}

struct KbrlTraceResult {
  std::vector<QTable> tables;  // one per input slice
  bool converged = false;
  int iterations = 0;
};

/// Runs kernel-based planning jointly over all slices and returns a Q table
/// per slice. Tuples appearing in several slices are stored once (keyed by
/// replay slot). The last step of a truncated slice has no known resultant
/// state and only enters as an evaluated state.
inline KbrlTraceResult kbrl_trace(const std::vector<TrajectorySlice>& slices,
                                  const std::vector<std::vector<double>>& q_theta,
                                  std::size_t num_actions, const KernelParams& params,
                                  double gamma) {
  if (slices.size() != q_theta.size()) throw Error("kbrl_trace: one value block per slice");
  std::map<std::size_t, KernelTransition> unique;
  for (std::size_t m = 0; m < slices.size(); ++m) {
    const auto& s = slices[m];
    if (s.empty()) throw Error("trace computation: empty trajectory");
    check_dimension("kbrl_trace parametric values", s.size() * num_actions, q_theta[m].size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto& tr = s.transitions[t];
      const bool has_result = t + 1 < s.size();
      if (!tr.terminal && !has_result) continue;
      const auto slot = s.slots.empty() ? (m << 32) + t : s.slots[t];
      if (unique.count(slot)) continue;
      KernelTransition kt;
      kt.origin = tr.embedding;
      kt.action = tr.action;
      kt.reward = tr.reward;
      kt.terminal = tr.terminal;
      if (!tr.terminal) {
        kt.result = s.transitions[t + 1].embedding;
        const auto row = std::span<const double>(q_theta[m]).subspan((t + 1) * num_actions, num_actions);
        kt.result_q.assign(row.begin(), row.end());
      }
      unique.emplace(slot, std::move(kt));
    }
  }
  std::vector<KernelTransition> stores;
  stores.reserve(unique.size());
  for (auto& [slot, kt] : unique) stores.push_back(std::move(kt));

  KernelPlanner planner(std::move(stores), num_actions, params, gamma);
  const auto sol = planner.solve();

  KbrlTraceResult out;
  out.converged = sol.converged;
  out.iterations = sol.iterations;
  for (std::size_t m = 0; m < slices.size(); ++m) {
    const auto& s = slices[m];
    QTable table(s.size(), num_actions);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto theta = std::span<const double>(q_theta[m]).subspan(t * num_actions, num_actions);
      for (std::size_t a = 0; a < num_actions; ++a) {
        table.at(t, a) = planner.q_value(sol, s.transitions[t].embedding, theta, a);
      }
      table.v[t] = max_value<double>(table.row(t));
    }
    out.tables.push_back(std::move(table));
  }
  return out;
}

}  // namespace eva

#endif  // EVA_TRACE_COMPUTATION_HPP_
