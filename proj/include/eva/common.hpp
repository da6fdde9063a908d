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

#ifndef EVA_COMMON_HPP_
#define EVA_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eva {

/// Fixed-length code produced by the penultimate layer of a Q-network.
using Embedding = std::vector<float>;

/// Flattened environment observation. Opaque to memory structures.
using Observation = std::vector<float>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t got)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

/// Raised when a training step produces a non-finite loss.
class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void check_dimension(const char* what, std::size_t expected, std::size_t got) {
  if (expected != got) throw DimensionError(what, expected, got);
}

template <typename T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

/// Index of the largest element; ties go to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename T>
T max_value(std::span<const T> values) {
  return values[argmax(values)];
}

}  // namespace eva

#endif  // EVA_COMMON_HPP_
