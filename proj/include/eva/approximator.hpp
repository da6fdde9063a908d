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

#ifndef EVA_APPROXIMATOR_HPP_
#define EVA_APPROXIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "eva/common.hpp"
#include "eva/io.hpp"
#include "eva/mlp.hpp"
#include "eva/train_batch.hpp"

namespace eva {

/// Action-value function with an embedding of its input.
class QFunction {
 public:
  virtual ~QFunction() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::size_t embedding_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;

  /// Evaluates n observations laid out back to back. Writes n*A action values
  /// (sample-major) into q and, when non-empty, n*E embedding values.
  virtual void evaluate(std::span<const float> obs, std::size_t n, std::span<double> q,
                        std::span<float> embeddings) const = 0;

  std::vector<double> q_values(std::span<const float> obs) const {
    std::vector<double> q(num_actions());
    evaluate(obs, 1, q, {});
    return q;
  }

  Embedding embedding(std::span<const float> obs) const {
    std::vector<double> q(num_actions());
    Embedding e(embedding_dim());
    evaluate(obs, 1, q, e);
    return e;
  }

 protected:
  void check_evaluate_args(std::span<const float> obs, std::size_t n, std::span<double> q,
                           std::span<float> embeddings) const {
    check_dimension("QFunction observation batch", input_dim() * n, obs.size());
    check_dimension("QFunction q output", num_actions() * n, q.size());
    if (!embeddings.empty()) {
      check_dimension("QFunction embedding output", embedding_dim() * n, embeddings.size());
    }
  }
};

/// Dense state x action table over discrete states. The observation is a
/// single float holding the state id. Used as an exact oracle in tests.
class TabularQFunction final : public QFunction {
 public:
  /// Embedding defaults to a one-hot code of the state.
  TabularQFunction(std::size_t num_states, std::size_t num_actions)
      : num_states_(num_states),
        num_actions_(num_actions),
        embedding_dim_(num_states),
        table_(num_states * num_actions, 0.0) {}

  /// Hand-coded features: row s of features (num_states x dim) embeds state s.
  TabularQFunction(std::size_t num_states, std::size_t num_actions, std::size_t dim,
                   std::vector<float> features)
      : num_states_(num_states),
        num_actions_(num_actions),
        embedding_dim_(dim),
        table_(num_states * num_actions, 0.0),
        features_(std::move(features)) {
    check_dimension("TabularQFunction features", num_states * dim, features_.size());
  }

  std::size_t input_dim() const override { return 1; }
  std::size_t num_actions() const override { return num_actions_; }
  std::size_t embedding_dim() const override { return embedding_dim_; }
  std::size_t parameter_count() const override { return table_.size(); }
  std::size_t num_states() const { return num_states_; }

  double& at(std::size_t state, std::size_t action) { return table_[state * num_actions_ + action]; }
  double at(std::size_t state, std::size_t action) const {
    return table_[state * num_actions_ + action];
  }

  void set_row(std::size_t state, std::span<const double> values) {
    check_dimension("TabularQFunction::set_row", num_actions_, values.size());
    std::copy(values.begin(), values.end(), table_.begin() + static_cast<std::ptrdiff_t>(state * num_actions_));
  }

  void evaluate(std::span<const float> obs, std::size_t n, std::span<double> q,
                std::span<float> embeddings) const override {
    check_evaluate_args(obs, n, q, embeddings);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = state_of(obs[i]);
      std::copy_n(table_.begin() + static_cast<std::ptrdiff_t>(s * num_actions_), num_actions_,
                  q.begin() + static_cast<std::ptrdiff_t>(i * num_actions_));
      if (embeddings.empty()) continue;
      auto out = embeddings.subspan(i * embedding_dim_, embedding_dim_);
      if (features_.empty()) {
        std::fill(out.begin(), out.end(), 0.0f);
        out[s] = 1.0f;
      } else {
        std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(s * embedding_dim_),
                    embedding_dim_, out.begin());
      }
    }
  }

 private:
  std::size_t state_of(float id) const {
    if (!(id >= 0.0f) || static_cast<std::size_t>(id) >= num_states_) {
      throw Error("TabularQFunction: state id out of range");
    }
    return static_cast<std::size_t>(id);
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t embedding_dim_;
  std::vector<double> table_;
  std::vector<float> features_;
};

/// MLP Q-network. The post-ReLU activations of the last hidden layer (width E)
/// are the embedding.
class MlpQFunction final : public QFunction {
 public:
  MlpQFunction() = default;

  MlpQFunction(std::size_t input_dim, const std::vector<std::size_t>& hidden,
               std::size_t embedding_dim, std::size_t num_actions)
      : net_(layer_sizes(input_dim, hidden, embedding_dim, num_actions)) {}

  explicit MlpQFunction(Mlp<float> net) : net_(std::move(net)) {
    if (net_.num_layers() < 2) throw Error("MlpQFunction: need at least one hidden layer");
  }

  static std::vector<std::size_t> layer_sizes(std::size_t input_dim,
                                              const std::vector<std::size_t>& hidden,
                                              std::size_t embedding_dim, std::size_t num_actions) {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(embedding_dim);
    sizes.push_back(num_actions);
    return sizes;
  }

  template <typename Rng>
  void init(Rng& rng) {
    net_.init_uniform(rng);
  }

  std::size_t input_dim() const override { return net_.input_dim(); }
  std::size_t num_actions() const override { return net_.output_dim(); }
  std::size_t embedding_dim() const override { return net_.embedding_dim(); }
  std::size_t parameter_count() const override { return net_.parameter_count(); }

  Mlp<float>& net() { return net_; }
  const Mlp<float>& net() const { return net_; }

  void evaluate(std::span<const float> obs, std::size_t n, std::span<double> q,
                std::span<float> embeddings) const override {
    check_evaluate_args(obs, n, q, embeddings);
    const auto acts = net_.forward(obs, n);
    const auto& out = acts.output();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < num_actions(); ++a) {
        q[i * num_actions() + a] = static_cast<double>(out(Eigen::Index(a), Eigen::Index(i)));
      }
    }
    if (!embeddings.empty()) {
      const auto& e = acts.embedding();
      std::copy_n(e.data(), embedding_dim() * n, embeddings.begin());
    }
  }

  void write(ByteWriter& w) const {
    std::vector<std::uint64_t> sizes(net_.sizes().begin(), net_.sizes().end());
    w.put_vector(sizes);
    w.put_array(net_.parameters());
  }

  static MlpQFunction read(ByteReader& r) {
    const auto sizes = r.get_vector<std::uint64_t>();
    if (sizes.size() < 3) throw CheckpointError("network: bad layer list");
    Mlp<float> net(std::vector<std::size_t>(sizes.begin(), sizes.end()));
    const auto params = r.get_vector<float>();
    if (params.size() != net.parameter_count()) throw CheckpointError("network: parameter count mismatch");
    std::copy(params.begin(), params.end(), net.parameters().begin());
    return MlpQFunction(std::move(net));
  }

 private:
  Mlp<float> net_;
};

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with the bias correction folded into the step size.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamOptions options) : options_(options), m_(n, 0), v_(n, 0) {}

  const AdamOptions& options() const { return options_; }
  std::uint64_t steps() const { return step_; }

  void apply(std::span<Scalar> params, std::span<const Scalar> grad) {
    check_dimension("Adam::apply", m_.size(), params.size());
    check_dimension("Adam::apply grad", m_.size(), grad.size());
    ++step_;
    const double t = static_cast<double>(step_);
    const double lr_t = options_.learning_rate * std::sqrt(1.0 - std::pow(options_.beta2, t)) /
                        (1.0 - std::pow(options_.beta1, t));
    const auto b1 = static_cast<Scalar>(options_.beta1);
    const auto b2 = static_cast<Scalar>(options_.beta2);
    const auto eps = static_cast<Scalar>(options_.epsilon);
    const auto lr = static_cast<Scalar>(lr_t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Scalar g = grad[i];
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g * g;
      params[i] -= lr * m_[i] / (std::sqrt(v_[i]) + eps);
    }
  }

  void write(ByteWriter& w) const {
    w.put<double>(options_.learning_rate);
    w.put<double>(options_.beta1);
    w.put<double>(options_.beta2);
    w.put<double>(options_.epsilon);
    w.put<std::uint64_t>(step_);
    w.put_vector(m_);
    w.put_vector(v_);
  }

  static Adam read(ByteReader& r) {
    Adam a;
    a.options_.learning_rate = r.get<double>();
    a.options_.beta1 = r.get<double>();
    a.options_.beta2 = r.get<double>();
    a.options_.epsilon = r.get<double>();
    a.step_ = r.get<std::uint64_t>();
    a.m_ = r.get_vector<Scalar>();
    a.v_ = r.get_vector<Scalar>();
    if (a.m_.size() != a.v_.size()) throw CheckpointError("optimizer: moment size mismatch");
    return a;
  }

 private:
  AdamOptions options_;
  std::vector<Scalar> m_;
  std::vector<Scalar> v_;
  std::uint64_t step_ = 0;
};

/// Mean squared Q-learning error over the batch:
///   y = r + gamma * max_a target(s', a), or y = r at terminal transitions.
/// When grad is non-empty the gradient w.r.t. the online parameters is added to it.
template <typename Scalar>
Scalar q_learning_loss(const Mlp<Scalar>& online, const Mlp<Scalar>& target, const TrainBatch& batch,
                       Scalar gamma, std::span<Scalar> grad = {}) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  const std::size_t n = batch.size();
  if (n == 0) throw Error("q_learning_loss: empty batch");
  check_dimension("q_learning_loss obs", online.input_dim(), batch.obs_dim);

  const auto next = target.forward(batch.next_obs, n);
  const auto acts = online.forward(batch.obs, n);
  const Matrix& q = acts.output();

  Matrix d_out = Matrix::Zero(q.rows(), q.cols());
  Scalar loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = Eigen::Index(i);
    const auto a = batch.actions[i];
    if (a < 0 || a >= q.rows()) throw Error("q_learning_loss: action out of range");
    Scalar y = static_cast<Scalar>(batch.rewards[i]);
    if (!batch.terminal[i]) y += gamma * next.output().col(col).maxCoeff();
    const Scalar err = q(a, col) - y;
    loss += err * err;
    d_out(a, col) = Scalar(2) * err / static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);
  if (!grad.empty()) online.backward(acts, d_out, grad);
  return loss;
}

/// One Adam step on the squared Q-learning error. Returns the pre-update loss.
inline float train_step(MlpQFunction& online, const MlpQFunction& target, const TrainBatch& batch,
                        float gamma, Adam<float>& optimizer) {
  if (!(gamma >= 0.0f && gamma <= 1.0f)) throw Error("train_step: gamma must lie in [0, 1]");
  if (!online.net().same_architecture(target.net())) {
    throw Error("train_step: online and target architectures differ");
  }
  AlignedVector<float> grad(online.parameter_count(), 0.0f);
  const float loss = q_learning_loss<float>(online.net(), target.net(), batch, gamma, grad);
  if (!std::isfinite(loss)) {
    throw TrainingDivergence("train_step: non-finite loss (" + std::to_string(loss) + ")");
  }
  optimizer.apply(online.net().parameters(), grad);
  return loss;
}

/// Copies the online parameters into the target network.
inline void sync_target(const MlpQFunction& online, MlpQFunction& target) {
  if (!online.net().same_architecture(target.net())) {
    throw Error("sync_target: architectures differ");
  }
  const auto src = online.net().parameters();
  std::copy(src.begin(), src.end(), target.net().parameters().begin());
}

}  // namespace eva

#endif  // EVA_APPROXIMATOR_HPP_
