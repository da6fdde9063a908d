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

#ifndef EVA_CHECKPOINT_HPP_
#define EVA_CHECKPOINT_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "eva/common.hpp"
#include "eva/io.hpp"

namespace eva {

// File layout:
//   "EVA1" | u32 format version | { 4-byte tag | u64 payload length | payload }*
// All integers little-endian.
inline constexpr std::string_view kCheckpointMagic = "EVA1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace chunk {
inline constexpr std::string_view kConfig = "CONF";
inline constexpr std::string_view kNetwork = "QNET";
inline constexpr std::string_view kTarget = "TNET";
inline constexpr std::string_view kOptimizer = "ADAM";
inline constexpr std::string_view kReplay = "RPLY";
inline constexpr std::string_view kValueBuffer = "VBUF";
inline constexpr std::string_view kAgentState = "AGNT";
inline constexpr std::string_view kRng = "RNGS";
inline constexpr std::string_view kSession = "SESS";

inline constexpr std::array<std::string_view, 9> kKnown{
    kConfig, kNetwork, kTarget, kOptimizer, kReplay, kValueBuffer, kAgentState, kRng, kSession};
}  // namespace chunk

class CheckpointWriter {
 public:
  CheckpointWriter() {
    out_.insert(out_.end(), kCheckpointMagic.begin(), kCheckpointMagic.end());
    append_le(kCheckpointVersion);
  }

  void add(std::string_view tag, const std::vector<std::uint8_t>& payload) {
    if (tag.size() != 4) throw CheckpointError("chunk tag must be 4 bytes");
    out_.insert(out_.end(), tag.begin(), tag.end());
    append_le(static_cast<std::uint64_t>(payload.size()));
    out_.insert(out_.end(), payload.begin(), payload.end());
  }

  const std::vector<std::uint8_t>& bytes() const { return out_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
    f.write(reinterpret_cast<const char*>(out_.data()), static_cast<std::streamsize>(out_.size()));
    if (!f) throw CheckpointError("failed writing checkpoint " + path.string());
  }

 private:
  template <typename T>
  void append_le(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  std::vector<std::uint8_t> out_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) { parse(); }

  static CheckpointReader load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return CheckpointReader(std::move(bytes));
  }

  bool has(std::string_view tag) const {
    return std::any_of(chunks_.begin(), chunks_.end(), [&](const Chunk& c) { return c.tag == tag; });
  }

  ByteReader open(std::string_view tag) const {
    for (const auto& c : chunks_) {
      if (c.tag == tag) {
        return ByteReader(std::span<const std::uint8_t>(bytes_).subspan(c.offset, c.length),
                          "chunk " + std::string(tag));
      }
    }
    throw CheckpointError("checkpoint is missing chunk '" + std::string(tag) + "'");
  }

  std::vector<std::string> tags() const {
    std::vector<std::string> out;
    for (const auto& c : chunks_) out.push_back(c.tag);
    return out;
  }

 private:
  struct Chunk {
    std::string tag;
    std::size_t offset;
    std::size_t length;
  };

  void parse() {
    const std::size_t header = kCheckpointMagic.size() + sizeof(std::uint32_t);
    if (bytes_.size() < header ||
        !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes_.begin())) {
      throw CheckpointError("not a checkpoint file (bad magic)");
    }
    ByteReader r(bytes_, "checkpoint header");
    r.get<std::uint32_t>();  // magic
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    std::size_t pos = header;
    while (pos < bytes_.size()) {
      if (bytes_.size() - pos < 12) throw CheckpointError("truncated chunk header");
      std::string tag(reinterpret_cast<const char*>(bytes_.data() + pos), 4);
      std::uint64_t length = 0;
      std::memcpy(&length, bytes_.data() + pos + 4, sizeof(length));
      pos += 12;
      if (std::find(chunk::kKnown.begin(), chunk::kKnown.end(), tag) == chunk::kKnown.end()) {
        throw CheckpointError("unknown chunk tag '" + tag + "'");
      }
      if (length > bytes_.size() - pos) throw CheckpointError("truncated chunk '" + tag + "'");
      if (has(tag)) throw CheckpointError("duplicate chunk '" + tag + "'");
      chunks_.push_back({tag, pos, static_cast<std::size_t>(length)});
      pos += length;
    }
  }

  std::vector<std::uint8_t> bytes_;
  std::vector<Chunk> chunks_;
};

}  // namespace eva

#endif  // EVA_CHECKPOINT_HPP_
