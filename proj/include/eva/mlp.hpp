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

#ifndef EVA_MLP_HPP_
#define EVA_MLP_HPP_

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "eva/common.hpp"

namespace eva {

/// Fully connected network with ReLU hidden layers and a linear output layer.
///
/// Storage at Eigen's maximum alignment. Eigen peels vector loops by address,
/// so the same data at a different alignment can round differently.
template <typename Scalar>
using AlignedVector = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

/// All weights and biases live in one flat parameter vector. Layer l occupies
/// a column-major (out x in) weight block followed by its bias. Batches are
/// column-per-sample matrices.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  /// Post-activation values of every layer for one batch; front() is the input.
  struct Activations {
    std::vector<Matrix> layers;
    const Matrix& output() const { return layers.back(); }
    const Matrix& embedding() const { return layers[layers.size() - 2]; }
  };

  Mlp() = default;

  explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw Error("Mlp: need at least input and output layer");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw Error("Mlp: zero-width layer");
      weight_offsets_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      bias_offsets_.push_back(offset);
      offset += sizes_[l + 1];
    }
    params_.assign(offset, Scalar(0));
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  /// Width of the last hidden layer (the input layer if there is none).
  std::size_t embedding_dim() const { return sizes_[sizes_.size() - 2]; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<Scalar> parameters() { return params_; }
  std::span<const Scalar> parameters() const { return params_; }

  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  template <typename Rng>
  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(sizes_[l]));
      std::uniform_real_distribution<double> u(-static_cast<double>(bound),
                                               static_cast<double>(bound));
      const auto end = bias_offsets_[l] + sizes_[l + 1];
      for (std::size_t i = weight_offsets_[l]; i < end; ++i) params_[i] = static_cast<Scalar>(u(rng));
    }
  }

  ConstMatrixMap weight(std::size_t l) const {
    return {params_.data() + weight_offsets_[l], Eigen::Index(sizes_[l + 1]), Eigen::Index(sizes_[l])};
  }
  ConstVectorMap bias(std::size_t l) const {
    return {params_.data() + bias_offsets_[l], Eigen::Index(sizes_[l + 1])};
  }

  /// Forward pass over a column-per-sample batch.
  Activations forward(const Matrix& input) const {
    check_dimension("Mlp::forward input", input_dim(), static_cast<std::size_t>(input.rows()));
    Activations acts;
    acts.layers.reserve(sizes_.size());
    acts.layers.push_back(input);
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Matrix z = weight(l) * acts.layers.back();
      z.colwise() += bias(l);
      if (l + 1 < num_layers()) z = z.cwiseMax(Scalar(0));
      acts.layers.push_back(std::move(z));
    }
    return acts;
  }

  Activations forward(std::span<const float> batch, std::size_t n) const {
    check_dimension("Mlp::forward batch", input_dim() * n, batch.size());
    Eigen::Map<const Eigen::MatrixXf> x(batch.data(), Eigen::Index(input_dim()), Eigen::Index(n));
    return forward(Matrix(x.template cast<Scalar>()));
  }

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const Activations& acts, const Matrix& d_output, std::span<Scalar> grad) const {
    check_dimension("Mlp::backward grad", parameter_count(), grad.size());
    Matrix delta = d_output;
    for (std::size_t l = num_layers(); l-- > 0;) {
      const Matrix& in = acts.layers[l];
      MatrixMap gw(grad.data() + weight_offsets_[l], Eigen::Index(sizes_[l + 1]),
                   Eigen::Index(sizes_[l]));
      Eigen::Map<Vector> gb(grad.data() + bias_offsets_[l], Eigen::Index(sizes_[l + 1]));
      gw.noalias() += delta * in.transpose();
      gb.noalias() += delta.rowwise().sum();
      if (l == 0) break;
      Matrix back = weight(l).transpose() * delta;
      // ReLU derivative from the post-activation: positive where the unit fired.
      delta = back.cwiseProduct((in.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<Other>(params_[i]);
    return out;
  }

  bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  AlignedVector<Scalar> params_;
};

}  // namespace eva

#endif  // EVA_MLP_HPP_
