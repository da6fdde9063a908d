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

#ifndef EVA_NN_INDEX_HPP_
#define EVA_NN_INDEX_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "eva/common.hpp"

namespace eva {

using HandleId = std::uint64_t;

struct NeighbourHit {
  HandleId id = 0;
  float distance = 0.0f;  // squared L2

  friend bool operator==(const NeighbourHit&, const NeighbourHit&) = default;
};

/// Squared L2 distance. Differences are taken in float and summed in double.
inline float squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float d = a[i] - b[i];
    acc += static_cast<double>(d * d);
  }
  return static_cast<float>(acc);
}

/// Exact k-nearest-neighbour index over fixed-dimension embeddings.
///
/// Points live in one contiguous buffer; removal swaps the last point into the
/// vacated row, so storage order is arbitrary. Query results never depend on
/// storage order: hits are sorted by (distance, id).
///
/// Any number of concurrent const calls are safe; mutation needs exclusive access.
class NnIndex {
 public:
  explicit NnIndex(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error("NnIndex: dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(HandleId id) const { return rows_.count(id) != 0; }

  void reserve(std::size_t n) {
    data_.reserve(n * dim_);
    ids_.reserve(n);
    rows_.reserve(n);
  }

  void insert(HandleId id, std::span<const float> e) {
    check_dimension("NnIndex::insert", dim_, e.size());
    if (!all_finite(e)) throw Error("NnIndex::insert: embedding has non-finite component");
    if (contains(id)) throw Error("NnIndex::insert: duplicate id " + std::to_string(id));
    rows_.emplace(id, ids_.size());
    ids_.push_back(id);
    data_.insert(data_.end(), e.begin(), e.end());
  }

  /// Returns false when the id is absent.
  bool remove(HandleId id) {
    auto it = rows_.find(id);
    if (it == rows_.end()) return false;
    const std::size_t row = it->second;
    const std::size_t last = ids_.size() - 1;
    if (row != last) {
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(last * dim_), dim_,
                  data_.begin() + static_cast<std::ptrdiff_t>(row * dim_));
      ids_[row] = ids_[last];
      rows_[ids_[row]] = row;
    }
    ids_.pop_back();
    data_.resize(last * dim_);
    rows_.erase(it);
    return true;
  }

  void clear() {
    data_.clear();
    ids_.clear();
    rows_.clear();
  }

  std::vector<NeighbourHit> query(std::span<const float> q, std::size_t k) const {
    check_dimension("NnIndex::query", dim_, q.size());
    if (k == 0) throw Error("NnIndex::query: k must be at least 1");
    std::vector<NeighbourHit> hits;
    hits.reserve(ids_.size());
    for (std::size_t row = 0; row < ids_.size(); ++row) {
      hits.push_back({ids_[row], squared_distance(q, point(row))});
    }
    const auto n = std::min(k, hits.size());
    auto closer = [](const NeighbourHit& a, const NeighbourHit& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    };
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                      closer);
    hits.resize(n);
    return hits;
  }

  /// Stored embedding for a present id.
  std::span<const float> at(HandleId id) const { return point(rows_.at(id)); }

  /// Ids in storage order.
  std::span<const HandleId> ids() const { return ids_; }

 private:
  std::span<const float> point(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }

  std::size_t dim_;
  std::vector<float> data_;
  std::vector<HandleId> ids_;
  std::unordered_map<HandleId, std::size_t> rows_;
};

}  // namespace eva

#endif  // EVA_NN_INDEX_HPP_
