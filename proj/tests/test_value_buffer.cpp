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

#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "eva/config.hpp"
#include "eva/value_buffer.hpp"

namespace eva {
namespace {

using Q = std::vector<double>;

TEST(ValueBuffer, FifoEviction) {
  ValueBuffer vb(2, 1, 1);
  vb.insert(std::vector<float>{0}, Q{1});
  vb.insert(std::vector<float>{10}, Q{2});
  vb.insert(std::vector<float>{20}, Q{3});
  EXPECT_EQ(vb.size(), 2u);
  EXPECT_EQ(vb.evictions(), 1u);
  // The entry at 0 is gone: the nearest to 0 is now the one at 10.
  EXPECT_EQ(*vb.estimate(std::vector<float>{0}, 1, 0.0), Q{2});
}

TEST(ValueBuffer, InsertedEntryIsRetrievable) {
  ValueBuffer vb(10, 2, 3);
  vb.insert(std::vector<float>{1, 2}, Q{1, 2, 3});
  vb.insert(std::vector<float>{5, 5}, Q{4, 5, 6});
  EXPECT_EQ(*vb.estimate(std::vector<float>{5, 5}, 1, 0.0), (Q{4, 5, 6}));
}

TEST(ValueBuffer, DefaultCapacity) {
  EXPECT_EQ(AgentConfig{}.value_buffer_size, 2000);
}

TEST(ValueBuffer, EquidistantMean) {
  ValueBuffer vb(10, 1, 2);
  vb.insert(std::vector<float>{-1}, Q{0, 2});
  vb.insert(std::vector<float>{1}, Q{2, 0});
  EXPECT_EQ(*vb.estimate(std::vector<float>{0}, 2, 0.0), (Q{1, 1}));
}

TEST(ValueBuffer, SingleEntryForAnyK) {
  ValueBuffer vb(10, 1, 2);
  vb.insert(std::vector<float>{3}, Q{7, -1});
  for (std::size_t k : {1u, 5u, 50u}) EXPECT_EQ(*vb.estimate(std::vector<float>{0}, k, 1e-5), (Q{7, -1}));
}

TEST(ValueBuffer, EmptyGivesNoEstimate) {
  ValueBuffer vb(10, 1, 2);
  EXPECT_FALSE(vb.estimate(std::vector<float>{0}, 5, 0.0).has_value());
}

// exp(-(1 - 0) / 1e-5) = exp(-1e5), far below 1e-30.
TEST(ValueBuffer, SmallTemperatureSelectsNearest) {
  ValueBuffer vb(10, 1, 2);
  vb.insert(std::vector<float>{0}, Q{1, 2});
  vb.insert(std::vector<float>{1}, Q{100, -100});
  const auto est = *vb.estimate(std::vector<float>{0}, 2, 1e-5);
  EXPECT_NEAR(est[0], 1.0, 1e-6);
  EXPECT_NEAR(est[1], 2.0, 1e-6);
}

TEST(ValueBuffer, EstimateIsConvexCombination) {
  std::mt19937_64 rng(21);
  std::normal_distribution<float> x;
  std::uniform_real_distribution<double> v(-5.0, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    ValueBuffer vb(50, 3, 4);
    std::vector<Q> inserted;
    for (int i = 0; i < 40; ++i) {
      Q q(4);
      for (auto& e : q) e = v(rng);
      vb.insert(std::vector<float>{x(rng), x(rng), x(rng)}, q);
      inserted.push_back(q);
    }
    const double temperature = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 1e-5 : 0.5);
    const auto est = *vb.estimate(std::vector<float>{x(rng), x(rng), x(rng)}, 5, temperature);
    for (std::size_t a = 0; a < 4; ++a) {
      double lo = 1e300, hi = -1e300;
      for (const auto& q : inserted) {
        lo = std::min(lo, q[a]);
        hi = std::max(hi, q[a]);
      }
      EXPECT_GE(est[a], lo - 1e-12);
      EXPECT_LE(est[a], hi + 1e-12);
    }
  }
}

TEST(ValueBuffer, ClearEmpties) {
  ValueBuffer vb(4, 1, 1);
  vb.insert(std::vector<float>{0}, Q{1});
  vb.clear();
  EXPECT_TRUE(vb.empty());
  EXPECT_FALSE(vb.estimate(std::vector<float>{0}, 1, 0.0));
}

TEST(ValueBuffer, Errors) {
  ValueBuffer vb(4, 2, 2);
  EXPECT_THROW(vb.insert(std::vector<float>{0}, Q{1, 2}), DimensionError);
  EXPECT_THROW(vb.insert(std::vector<float>{0, 0}, Q{1}), DimensionError);
  EXPECT_THROW(vb.insert(std::vector<float>{0, 0}, Q{1, NAN}), Error);
  EXPECT_THROW(vb.estimate(std::vector<float>{0, 0}, 0, 0.0), Error);
  EXPECT_THROW(vb.estimate(std::vector<float>{0, 0}, 1, -1.0), Error);
  EXPECT_THROW(ValueBuffer(0, 1, 1), Error);
}

TEST(ValueBuffer, SerialisationRoundTrip) {
  ValueBuffer vb(3, 2, 2);
  for (int i = 0; i < 5; ++i) vb.insert(std::vector<float>{float(i), 1}, Q{double(i), -double(i)});
  ByteWriter w;
  vb.write(w);
  ByteReader r(w.bytes());
  auto copy = ValueBuffer::read(r);
  r.expect_done();
  ByteWriter w2;
  copy.write(w2);
  EXPECT_EQ(w.bytes(), w2.bytes());
  // FIFO order survives: the next insert evicts the same entry in both.
  vb.insert(std::vector<float>{9, 9}, Q{9, 9});
  copy.insert(std::vector<float>{9, 9}, Q{9, 9});
  EXPECT_EQ(vb.estimate(std::vector<float>{2, 1}, 1, 0.0), copy.estimate(std::vector<float>{2, 1}, 1, 0.0));
  EXPECT_EQ(*copy.estimate(std::vector<float>{2, 1}, 1, 0.0), (Q{3, -3}));
}

}  // namespace
}  // namespace eva
