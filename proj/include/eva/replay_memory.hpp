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

#ifndef EVA_REPLAY_MEMORY_HPP_
#define EVA_REPLAY_MEMORY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "eva/common.hpp"
#include "eva/io.hpp"
#include "eva/nn_index.hpp"
#include "eva/train_batch.hpp"

namespace eva {

/// One step of experience: the observation the agent acted on, the action,
/// the reward that followed, and the embedding computed when acting.
struct Transition {
  Observation obs;
  int action = 0;
  float reward = 0.0f;
  Embedding embedding;
  std::uint64_t episode_id = 0;
  std::uint32_t step_index = 0;
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Temporally contiguous run of transitions from one episode.
struct TrajectorySlice {
  std::vector<Transition> transitions;
  std::vector<std::size_t> slots;
  // Cut by max length or a missing successor rather than by a terminal step.
  bool truncated = false;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

struct ReplayStats {
  std::uint64_t appended = 0;
  std::uint64_t evictions = 0;
};

/// Fixed-capacity FIFO ring of transitions with successor links and an
/// embedding index over every live slot.
///
/// A slot links to the slot holding the next step of the same episode. Links
/// are re-validated on traversal against (episode_id, step_index), so a link
/// into a reused slot is never followed.
class ReplayMemory {
 public:
  static constexpr std::int64_t kNoSlot = -1;

  ReplayMemory(std::size_t capacity, std::size_t embedding_dim, std::size_t num_actions)
      : capacity_(capacity),
        num_actions_(num_actions),
        slots_(capacity),
        live_(capacity, 0),
        next_(capacity, kNoSlot),
        index_(embedding_dim) {
    if (capacity == 0) throw Error("ReplayMemory: capacity must be at least 1");
    index_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t embedding_dim() const { return index_.dim(); }
  const ReplayStats& stats() const { return stats_; }
  const NnIndex& index() const { return index_; }

  bool is_live(std::size_t slot) const { return slot < capacity_ && live_[slot] != 0; }

  const Transition& at(std::size_t slot) const {
    if (!is_live(slot)) throw Error("ReplayMemory: slot " + std::to_string(slot) + " is not live");
    return slots_[slot];
  }

  /// Stores t in the next ring slot, evicting its previous occupant.
  std::size_t append(Transition t) {
    if (t.action < 0 || static_cast<std::size_t>(t.action) >= num_actions_) {
      throw Error("ReplayMemory::append: action out of range");
    }
    if (!std::isfinite(t.reward)) throw Error("ReplayMemory::append: non-finite reward");
    check_dimension("ReplayMemory::append embedding", index_.dim(), t.embedding.size());

    const std::size_t slot = head_;
    if (live_[slot]) {
      evict(slot);
    } else {
      ++size_;
    }

    if (t.step_index > 0) {
      auto open = open_episodes_.find(t.episode_id);
      if (open != open_episodes_.end()) {
        const auto prev = open->second;
        if (live_[prev] && slots_[prev].step_index + 1 == t.step_index && !slots_[prev].terminal) {
          next_[prev] = static_cast<std::int64_t>(slot);
        }
      }
    }
    if (t.terminal) {
      open_episodes_.erase(t.episode_id);
    } else {
      open_episodes_[t.episode_id] = slot;
    }

    index_.insert(slot, t.embedding);
    slots_[slot] = std::move(t);
    live_[slot] = 1;
    next_[slot] = kNoSlot;
    head_ = (head_ + 1) % capacity_;
    ++stats_.appended;
    return slot;
  }

  /// Slot holding the next step of the same episode, if it is still stored.
  std::optional<std::size_t> successor(std::size_t slot) const {
    if (!is_live(slot)) return std::nullopt;
    const auto n = next_[slot];
    if (n == kNoSlot) return std::nullopt;
    const auto s = static_cast<std::size_t>(n);
    const auto& cur = slots_[slot];
    if (!live_[s] || slots_[s].episode_id != cur.episode_id ||
        slots_[s].step_index != cur.step_index + 1) {
      return std::nullopt;
    }
    return s;
  }

  TrajectorySlice extract_trajectory(std::size_t start_slot, std::size_t max_len) const {
    if (!is_live(start_slot)) {
      throw Error("ReplayMemory::extract_trajectory: slot " + std::to_string(start_slot) +
                  " is not live");
    }
    if (max_len == 0) throw Error("ReplayMemory::extract_trajectory: max_len must be positive");
    TrajectorySlice slice;
    std::size_t slot = start_slot;
    while (true) {
      slice.transitions.push_back(slots_[slot]);
      slice.slots.push_back(slot);
      if (slots_[slot].terminal) {
        slice.truncated = false;
        break;
      }
      if (slice.size() == max_len) {
        slice.truncated = true;
        break;
      }
      auto next = successor(slot);
      if (!next) {
        slice.truncated = true;
        break;
      }
      slot = *next;
    }
    return slice;
  }

  /// Forward slices starting at the m live transitions nearest to h.
  std::vector<TrajectorySlice> knn_trajectories(std::span<const float> h, std::size_t m,
                                                std::size_t max_len) const {
    std::vector<TrajectorySlice> out;
    if (empty()) return out;
    for (const auto& hit : index_.query(h, m)) {
      out.push_back(extract_trajectory(static_cast<std::size_t>(hit.id), max_len));
    }
    return out;
  }

  /// A transition can train the Q-network when its bootstrap state is known.
  bool trainable(std::size_t slot) const {
    return is_live(slot) && (slots_[slot].terminal || successor(slot).has_value());
  }

  /// Uniformly samples trainable transitions with replacement.
  template <typename Rng>
  TrainBatch sample(Rng& rng, std::size_t batch_size) const {
    if (empty()) throw Error("ReplayMemory::sample: buffer is empty");
    const std::size_t obs_dim = slots_[first_live()].obs.size();
    TrainBatch batch(obs_dim);
    // Before the ring wraps, live slots are exactly [0, size).
    std::uniform_int_distribution<std::size_t> pick(0, (size_ < capacity_ ? size_ : capacity_) - 1);
    std::size_t attempts = 0;
    while (batch.size() < batch_size) {
      if (++attempts > 1000 * batch_size + 1000) {
        throw Error("ReplayMemory::sample: no trainable transitions");
      }
      const std::size_t slot = pick(rng);
      if (!trainable(slot)) continue;
      const auto& t = slots_[slot];
      if (t.terminal) {
        batch.add(t.obs, t.action, t.reward, {}, true);
      } else {
        batch.add(t.obs, t.action, t.reward, slots_[*successor(slot)].obs, false);
      }
    }
    return batch;
  }

  void write(ByteWriter& w) const {
    w.put<std::uint64_t>(capacity_);
    w.put<std::uint64_t>(num_actions_);
    w.put<std::uint64_t>(index_.dim());
    w.put<std::uint64_t>(head_);
    w.put<std::uint64_t>(size_);
    w.put<std::uint64_t>(stats_.appended);
    w.put<std::uint64_t>(stats_.evictions);
    for (std::size_t s = 0; s < capacity_; ++s) {
      w.put_bool(live_[s] != 0);
      if (!live_[s]) continue;
      const auto& t = slots_[s];
      w.put_vector(t.obs);
      w.put<std::int32_t>(t.action);
      w.put<float>(t.reward);
      w.put_vector(t.embedding);
      w.put<std::uint64_t>(t.episode_id);
      w.put<std::uint32_t>(t.step_index);
      w.put_bool(t.terminal);
      w.put<std::int64_t>(next_[s]);
    }
    w.put<std::uint64_t>(open_episodes_.size());
    for (const auto& [episode, slot] : open_episodes_) {
      w.put<std::uint64_t>(episode);
      w.put<std::uint64_t>(slot);
    }
  }

  static ReplayMemory read(ByteReader& r) {
    const auto capacity = r.get<std::uint64_t>();
    const auto num_actions = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint64_t>();
    ReplayMemory m(capacity, dim, num_actions);
    m.head_ = r.get<std::uint64_t>();
    m.size_ = r.get<std::uint64_t>();
    m.stats_.appended = r.get<std::uint64_t>();
    m.stats_.evictions = r.get<std::uint64_t>();
    if (m.head_ >= capacity || m.size_ > capacity) throw CheckpointError("replay: bad ring state");
    for (std::size_t s = 0; s < capacity; ++s) {
      if (!r.get_bool()) continue;
      Transition t;
      t.obs = r.get_vector<float>();
      t.action = r.get<std::int32_t>();
      t.reward = r.get<float>();
      t.embedding = r.get_vector<float>();
      t.episode_id = r.get<std::uint64_t>();
      t.step_index = r.get<std::uint32_t>();
      t.terminal = r.get_bool();
      m.next_[s] = r.get<std::int64_t>();
      m.index_.insert(s, t.embedding);
      m.slots_[s] = std::move(t);
      m.live_[s] = 1;
    }
    if (m.index_.size() != m.size_) throw CheckpointError("replay: live slot count mismatch");
    const auto n_open = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_open; ++i) {
      const auto episode = r.get<std::uint64_t>();
      m.open_episodes_[episode] = r.get<std::uint64_t>();
    }
    return m;
  }

 private:
  void evict(std::size_t slot) {
    index_.remove(slot);
    auto open = open_episodes_.find(slots_[slot].episode_id);
    if (open != open_episodes_.end() && open->second == slot) open_episodes_.erase(open);
    live_[slot] = 0;
    next_[slot] = kNoSlot;
    ++stats_.evictions;
  }

  std::size_t first_live() const {
    for (std::size_t s = 0; s < capacity_; ++s) {
      if (live_[s]) return s;
    }
    return 0;
  }

  std::size_t capacity_;
  std::size_t num_actions_;
  std::vector<Transition> slots_;
  std::vector<std::uint8_t> live_;
  std::vector<std::int64_t> next_;
  std::map<std::uint64_t, std::size_t> open_episodes_;
  NnIndex index_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  ReplayStats stats_;
};

}  // namespace eva

#endif  // EVA_REPLAY_MEMORY_HPP_
