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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "eva/harness.hpp"

namespace eva {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small() {
  auto cfg = preset_config("smoke");
  cfg.agent.planning_neighbours = 4;
  cfg.agent.rollout_length = 20;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eva_test_checkpoint_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> header() {
  return CheckpointWriter().bytes();
}

void put_chunk_header(std::vector<std::uint8_t>& out, const char* tag, std::uint64_t length) {
  out.insert(out.end(), tag, tag + 4);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&length);
  out.insert(out.end(), p, p + 8);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  Session s(small(), 3);
  s.run(1200);
  const auto bytes = s.serialize();
  const auto copy = Session::deserialize(CheckpointReader(bytes));
  EXPECT_EQ(copy.serialize(), bytes);

  const auto dir = scratch("roundtrip");
  s.save(dir / "a.eva");
  Session::load(dir / "a.eva").save(dir / "b.eva");
  EXPECT_EQ(read_file(dir / "a.eva"), bytes);
  EXPECT_EQ(read_file(dir / "b.eva"), bytes);
}

TEST(Checkpoint, ContainsEveryChunk) {
  Session s(small(), 0);
  s.run(10);
  const CheckpointReader r(s.serialize());
  for (auto tag : chunk::kKnown) EXPECT_TRUE(r.has(tag)) << tag;
  EXPECT_FALSE(CheckpointReader(s.serialize(false)).has(chunk::kValueBuffer));
}

// Interrupting a run with save/load must not change a single later action.
TEST(Checkpoint, ContinuationEquality) {
  const auto cfg = small();
  std::vector<int> straight, resumed;
  Session a(cfg, 11);
  a.run(1500);
  const auto bytes = a.serialize();
  a.run(1000, nullptr, [&](int act) { straight.push_back(act); });

  auto b = Session::deserialize(CheckpointReader(bytes));
  b.run(1000, nullptr, [&](int act) { resumed.push_back(act); });

  ASSERT_EQ(straight.size(), 1000u);
  EXPECT_EQ(straight, resumed);
  EXPECT_EQ(a.serialize(), b.serialize());
  EXPECT_GT(b.agent().stats().planning_calls, 0u);
}

TEST(Checkpoint, UnknownTagIsNamed) {
  auto bytes = header();
  put_chunk_header(bytes, "ZZZZ", 0);
  try {
    CheckpointReader r(bytes);
    FAIL() << "accepted unknown tag";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("ZZZZ"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsCorruptHeaders) {
  auto bad_magic = header();
  bad_magic[0] = 'X';
  EXPECT_THROW(CheckpointReader{bad_magic}, CheckpointError);

  auto bad_version = header();
  bad_version[4] = 9;
  EXPECT_THROW(CheckpointReader{bad_version}, CheckpointError);

  EXPECT_THROW(CheckpointReader(std::vector<std::uint8_t>{'E', 'V'}), CheckpointError);

  auto short_chunk = header();
  put_chunk_header(short_chunk, "QNET", 100);
  short_chunk.resize(short_chunk.size() + 10);
  EXPECT_THROW(CheckpointReader{short_chunk}, CheckpointError);

  auto short_header = header();
  short_header.insert(short_header.end(), {'Q', 'N', 'E'});
  EXPECT_THROW(CheckpointReader{short_header}, CheckpointError);

  auto duplicate = header();
  put_chunk_header(duplicate, "QNET", 0);
  put_chunk_header(duplicate, "QNET", 0);
  EXPECT_THROW(CheckpointReader{duplicate}, CheckpointError);
}

TEST(Checkpoint, MissingChunkAndTrailingBytes) {
  CheckpointWriter w;
  w.add(chunk::kConfig, {});
  const CheckpointReader r(w.bytes());
  EXPECT_THROW(r.open(chunk::kNetwork), CheckpointError);
  EXPECT_THROW(Session::deserialize(r), Error);

  Session s(small(), 0);
  auto bytes = s.serialize();
  // Grow the last chunk (SESS) by one byte and patch its length.
  bytes.push_back(0);
  const CheckpointReader full(s.serialize());
  std::size_t pos = 8;
  std::uint64_t len = 0;
  for (const auto& tag : full.tags()) {
    std::memcpy(&len, bytes.data() + pos + 4, 8);
    if (tag == "SESS") break;
    pos += 12 + len;
  }
  ++len;
  std::memcpy(bytes.data() + pos + 4, &len, 8);
  EXPECT_THROW(Session::deserialize(CheckpointReader(bytes)), Error);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(Session::load("/nonexistent/x.eva"), CheckpointError);
}

}  // namespace
}  // namespace eva
