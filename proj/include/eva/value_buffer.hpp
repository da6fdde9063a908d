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

#ifndef EVA_VALUE_BUFFER_HPP_
#define EVA_VALUE_BUFFER_HPP_

#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "eva/common.hpp"
#include "eva/io.hpp"
#include "eva/nn_index.hpp"

namespace eva {

/// FIFO cache of (embedding, Q_NP) pairs produced by planning, queried by
/// nearest neighbours at action selection.
class ValueBuffer {
 public:
  ValueBuffer(std::size_t capacity, std::size_t embedding_dim, std::size_t num_actions)
      : capacity_(capacity), num_actions_(num_actions), index_(embedding_dim) {
    if (capacity == 0) throw Error("ValueBuffer: capacity must be at least 1");
    index_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  std::size_t embedding_dim() const { return index_.dim(); }
  std::size_t num_actions() const { return num_actions_; }
  std::uint64_t evictions() const { return evictions_; }

  void insert(std::span<const float> e, std::span<const double> q) {
    check_dimension("ValueBuffer::insert embedding", index_.dim(), e.size());
    check_dimension("ValueBuffer::insert values", num_actions_, q.size());
    if (!all_finite(q)) throw Error("ValueBuffer::insert: non-finite value");
    if (order_.size() == capacity_) {
      const auto oldest = order_.front();
      order_.pop_front();
      index_.remove(oldest);
      values_.erase(oldest);
      ++evictions_;
    }
    const auto id = next_id_++;
    index_.insert(id, e);
    values_.emplace(id, std::vector<double>(q.begin(), q.end()));
    order_.push_back(id);
  }

  /// Mean of the Q_NP vectors of the min(k, size) nearest entries. With
  /// temperature 0 the mean is unweighted; otherwise entries are weighted by
  /// softmax(-distance / temperature). Empty buffer gives no estimate.
  std::optional<std::vector<double>> estimate(std::span<const float> e, std::size_t k,
                                              double temperature) const {
    check_dimension("ValueBuffer::estimate", index_.dim(), e.size());
    if (k == 0) throw Error("ValueBuffer::estimate: k must be at least 1");
    if (!(temperature >= 0.0)) throw Error("ValueBuffer::estimate: negative temperature");
    if (empty()) return std::nullopt;

    const auto hits = index_.query(e, k);
    std::vector<double> weights(hits.size(), 1.0);
    if (temperature > 0.0) {
      // hits are sorted, so hits[0] holds the smallest distance
      const double d0 = hits.front().distance;
      for (std::size_t i = 0; i < hits.size(); ++i) {
        weights[i] = std::exp(-(static_cast<double>(hits[i].distance) - d0) / temperature);
      }
    }
    double total = 0.0;
    for (double w : weights) total += w;

    std::vector<double> out(num_actions_, 0.0);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const auto& q = values_.at(hits[i].id);
      const double w = weights[i] / total;
      for (std::size_t a = 0; a < num_actions_; ++a) out[a] += w * q[a];
    }
    return out;
  }

  void clear() {
    index_.clear();
    values_.clear();
    order_.clear();
  }

  void write(ByteWriter& w) const {
    w.put<std::uint64_t>(capacity_);
    w.put<std::uint64_t>(index_.dim());
    w.put<std::uint64_t>(num_actions_);
    w.put<std::uint64_t>(next_id_);
    w.put<std::uint64_t>(evictions_);
    w.put<std::uint64_t>(order_.size());
    for (auto id : order_) {
      w.put<std::uint64_t>(id);
      const auto e = index_.at(id);
      w.put_array(e);
      w.put_vector(values_.at(id));
    }
  }

  static ValueBuffer read(ByteReader& r) {
    const auto capacity = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint64_t>();
    const auto actions = r.get<std::uint64_t>();
    ValueBuffer vb(capacity, dim, actions);
    vb.next_id_ = r.get<std::uint64_t>();
    vb.evictions_ = r.get<std::uint64_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > capacity) throw CheckpointError("value buffer: too many entries");
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto id = r.get<std::uint64_t>();
      const auto e = r.get_vector<float>();
      auto q = r.get_vector<double>();
      check_dimension("value buffer entry", actions, q.size());
      vb.index_.insert(id, e);
      vb.values_.emplace(id, std::move(q));
      vb.order_.push_back(id);
    }
    return vb;
  }

 private:
  std::size_t capacity_;
  std::size_t num_actions_;
  NnIndex index_;
  std::unordered_map<HandleId, std::vector<double>> values_;
  std::deque<HandleId> order_;
  HandleId next_id_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace eva

#endif  // EVA_VALUE_BUFFER_HPP_
