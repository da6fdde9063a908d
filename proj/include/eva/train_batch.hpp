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

#ifndef EVA_TRAIN_BATCH_HPP_
#define EVA_TRAIN_BATCH_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "eva/common.hpp"

namespace eva {

/// Minibatch of one-step transitions. Observations are stored column-wise:
/// sample i occupies obs[i * obs_dim, (i + 1) * obs_dim).
struct TrainBatch {
  std::size_t obs_dim = 0;
  std::vector<float> obs;
  std::vector<int> actions;
  std::vector<float> rewards;
  std::vector<float> next_obs;
  std::vector<bool> terminal;

  explicit TrainBatch(std::size_t dim = 0) : obs_dim(dim) {}

  std::size_t size() const { return actions.size(); }

  void add(std::span<const float> s, int a, float r, std::span<const float> next, bool done) {
    check_dimension("TrainBatch::add", obs_dim, s.size());
    obs.insert(obs.end(), s.begin(), s.end());
    actions.push_back(a);
    rewards.push_back(r);
    if (done && next.empty()) {
      next_obs.insert(next_obs.end(), obs_dim, 0.0f);
    } else {
      check_dimension("TrainBatch::add next", obs_dim, next.size());
      next_obs.insert(next_obs.end(), next.begin(), next.end());
    }
    terminal.push_back(done);
  }
};

}  // namespace eva

#endif  // EVA_TRAIN_BATCH_HPP_
