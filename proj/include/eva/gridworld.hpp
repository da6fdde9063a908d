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

#ifndef EVA_GRIDWORLD_HPP_
#define EVA_GRIDWORLD_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eva/common.hpp"
#include "eva/io.hpp"

namespace eva {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Move : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };
inline constexpr std::size_t kNumMoves = 4;

/// Wall layout. Moves off the grid are blocked like moves into a wall.
class GridMap {
 public:
  GridMap(int rows, int cols) : rows_(rows), cols_(cols), wall_(std::size_t(rows * cols), 0) {
    if (rows <= 0 || cols <= 0) throw ConfigError("GridMap: empty grid");
  }

  /// The default 5 x 13 field with no interior walls.
  static GridMap open_field() { return GridMap(5, 13); }

  /// '#' is a wall, '.' is free; one row per line, all rows the same width.
  static GridMap parse(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream is{std::string(text)};
    for (std::string line; std::getline(is, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw ConfigError("GridMap: map has no rows");
    GridMap map(static_cast<int>(lines.size()), static_cast<int>(lines.front().size()));
    for (int r = 0; r < map.rows_; ++r) {
      const auto& line = lines[std::size_t(r)];
      if (static_cast<int>(line.size()) != map.cols_) throw ConfigError("GridMap: ragged rows");
      for (int c = 0; c < map.cols_; ++c) {
        if (line[std::size_t(c)] == '#') {
          map.wall_[map.offset({r, c})] = 1;
        } else if (line[std::size_t(c)] != '.') {
          throw ConfigError(std::string("GridMap: unexpected character '") + line[std::size_t(c)] + "'");
        }
      }
    }
    return map;
  }

  static GridMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("GridMap: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string to_string() const {
    std::string out;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) out += is_wall({r, c}) ? '#' : '.';
      out += '\n';
    }
    return out;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t cells() const { return wall_.size(); }
  bool inside(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  bool is_wall(Cell c) const { return !inside(c) || wall_[offset(c)] != 0; }
  std::size_t offset(Cell c) const { return std::size_t(c.row * cols_ + c.col); }

  std::vector<Cell> free_cells() const {
    std::vector<Cell> out;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        if (!is_wall({r, c})) out.push_back({r, c});
      }
    }
    return out;
  }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int rows_;
  int cols_;
  std::vector<std::uint8_t> wall_;
};

struct GridState {
  Cell agent;
  std::vector<Cell> coins;  // remaining coins, in placement order
  int steps_elapsed = 0;
  bool done = true;

  int coins_remaining() const { return static_cast<int>(coins.size()); }
  friend bool operator==(const GridState&, const GridState&) = default;
};

enum class ObservationMode { kSymbolic, kRgb };

struct StepResult {
  Observation obs;
  float reward = 0.0f;
  bool done = false;
  bool terminal = false;   // every coin collected
  bool truncated = false;  // step cap reached first
};

using Rgb = std::array<std::uint8_t, 3>;
inline constexpr Rgb kAgentColour{0, 255, 255};
inline constexpr Rgb kCoinColour{255, 255, 0};
inline constexpr Rgb kWallColour{128, 0, 128};
inline constexpr Rgb kFloorColour{255, 255, 255};

/// Coin-collection gridworld: four moves, -0.01 per step, +1 per coin, 500-step cap.
class GridWorld {
 public:
  static constexpr float kStepReward = -0.01f;
  static constexpr float kCoinReward = 1.0f;
  static constexpr int kDefaultMaxSteps = 500;

  explicit GridWorld(GridMap map = GridMap::open_field(),
                     ObservationMode mode = ObservationMode::kSymbolic,
                     int max_steps = kDefaultMaxSteps)
      : map_(std::move(map)), mode_(mode), max_steps_(max_steps) {
    if (max_steps <= 0) throw ConfigError("GridWorld: max_steps must be positive");
  }

  const GridMap& map() const { return map_; }
  const GridState& state() const { return state_; }
  int max_steps() const { return max_steps_; }
  ObservationMode mode() const { return mode_; }
  static constexpr std::size_t num_actions() { return kNumMoves; }

  /// Three planes (agent, coins, walls) or an RGB image scaled to [0, 1].
  std::size_t observation_size() const { return 3 * map_.cells(); }

  /// Places the agent and n_coins coins on distinct free cells, uniformly at random.
  template <typename Rng>
  Observation reset(Rng& rng, int n_coins) {
    if (n_coins < 1) throw ConfigError("GridWorld::reset: need at least one coin");
    auto free = map_.free_cells();
    if (static_cast<std::size_t>(n_coins) + 1 > free.size()) {
      throw ConfigError("GridWorld::reset: " + std::to_string(n_coins) +
                        " coins do not fit on " + std::to_string(free.size()) + " free cells");
    }
    // Partial Fisher-Yates: the first n_coins + 1 cells are a uniform draw without replacement.
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n_coins); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
      std::swap(free[i], free[pick(rng)]);
    }
    state_ = GridState{};
    state_.agent = free[0];
    state_.coins.assign(free.begin() + 1, free.begin() + 1 + n_coins);
    state_.steps_elapsed = 0;
    state_.done = false;
    return observe();
  }

  /// Installs an explicit state; used by tests and checkpoint restore.
  void set_state(GridState s) {
    if (map_.is_wall(s.agent)) throw ConfigError("GridWorld::set_state: agent on a wall");
    for (const auto& c : s.coins) {
      if (map_.is_wall(c)) throw ConfigError("GridWorld::set_state: coin on a wall");
    }
    state_ = std::move(s);
  }

  StepResult step(int action) {
    if (state_.done) throw Error("GridWorld::step: episode is over; call reset()");
    if (action < 0 || static_cast<std::size_t>(action) >= kNumMoves) {
      throw Error("GridWorld::step: invalid action " + std::to_string(action));
    }
    Cell next = state_.agent;
    switch (static_cast<Move>(action)) {
      case Move::kLeft: --next.col; break;
      case Move::kRight: ++next.col; break;
      case Move::kUp: --next.row; break;
      case Move::kDown: ++next.row; break;
    }
    if (!map_.is_wall(next)) state_.agent = next;
    ++state_.steps_elapsed;

    StepResult out;
    out.reward = kStepReward;
    auto coin = std::find(state_.coins.begin(), state_.coins.end(), state_.agent);
    if (coin != state_.coins.end()) {
      state_.coins.erase(coin);
      out.reward += kCoinReward;
    }
    out.terminal = state_.coins.empty();
    out.truncated = !out.terminal && state_.steps_elapsed >= max_steps_;
    out.done = out.terminal || out.truncated;
    state_.done = out.done;
    out.obs = observe();
    return out;
  }

  Observation observe() const {
    if (mode_ == ObservationMode::kRgb) {
      const auto img = render_rgb();
      Observation obs(img.size());
      std::transform(img.begin(), img.end(), obs.begin(),
                     [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
      return obs;
    }
    const std::size_t n = map_.cells();
    Observation obs(3 * n, 0.0f);
    obs[map_.offset(state_.agent)] = 1.0f;
    for (const auto& c : state_.coins) obs[n + map_.offset(c)] = 1.0f;
    for (int r = 0; r < map_.rows(); ++r) {
      for (int c = 0; c < map_.cols(); ++c) {
        if (map_.is_wall({r, c})) obs[2 * n + map_.offset({r, c})] = 1.0f;
      }
    }
    return obs;
  }

  /// rows x cols x 3 image: cyan agent, yellow coins, purple walls, white floor.
  std::vector<std::uint8_t> render_rgb() const {
    std::vector<std::uint8_t> img(map_.cells() * 3);
    auto paint = [&](Cell c, const Rgb& colour) {
      std::copy(colour.begin(), colour.end(), img.begin() + static_cast<std::ptrdiff_t>(map_.offset(c) * 3));
    };
    for (int r = 0; r < map_.rows(); ++r) {
      for (int c = 0; c < map_.cols(); ++c) paint({r, c}, map_.is_wall({r, c}) ? kWallColour : kFloorColour);
    }
    for (const auto& c : state_.coins) paint(c, kCoinColour);
    paint(state_.agent, kAgentColour);
    return img;
  }

  void write(ByteWriter& w) const {
    w.put<std::int32_t>(state_.agent.row);
    w.put<std::int32_t>(state_.agent.col);
    w.put<std::uint64_t>(state_.coins.size());
    for (const auto& c : state_.coins) {
      w.put<std::int32_t>(c.row);
      w.put<std::int32_t>(c.col);
    }
    w.put<std::int32_t>(state_.steps_elapsed);
    w.put_bool(state_.done);
  }

  void read(ByteReader& r) {
    GridState s;
    s.agent.row = r.get<std::int32_t>();
    s.agent.col = r.get<std::int32_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > map_.cells()) throw CheckpointError("environment: too many coins");
    for (std::uint64_t i = 0; i < n; ++i) {
      Cell c;
      c.row = r.get<std::int32_t>();
      c.col = r.get<std::int32_t>();
      s.coins.push_back(c);
    }
    s.steps_elapsed = r.get<std::int32_t>();
    s.done = r.get_bool();
    set_state(std::move(s));
  }

 private:
  GridMap map_;
  ObservationMode mode_;
  int max_steps_;
  GridState state_;
};

}  // namespace eva

#endif  // EVA_GRIDWORLD_HPP_
