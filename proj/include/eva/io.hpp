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

#ifndef EVA_IO_HPP_
#define EVA_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "eva/common.hpp"

namespace eva {

static_assert(std::endian::native == std::endian::little,
              "binary checkpoint code assumes a little-endian host");

/// Appends little-endian scalars and length-prefixed arrays to a byte buffer.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_bool(bool v) { put<std::uint8_t>(v ? 1 : 0); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    put<std::uint64_t>(values.size());
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }

  template <typename T>
  void put_vector(const std::vector<T>& values) {
    put_array(std::span<const T>(values));
  }

  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  template <typename Engine>
  void put_rng(const Engine& engine) {
    std::ostringstream os;
    os << engine;
    put_string(os.str());
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes, std::string context = "chunk")
      : bytes_(bytes), context_(std::move(context)) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
    return value;
  }

  bool get_bool() { return get<std::uint8_t>() != 0; }

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > remaining() / sizeof(T)) fail();
    std::vector<T> out(n);
    std::memcpy(out.data(), take(n * sizeof(T)).data(), n * sizeof(T));
    return out;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    if (n > remaining()) fail();
    auto s = take(n);
    return {reinterpret_cast<const char*>(s.data()), s.size()};
  }

  template <typename Engine>
  void get_rng(Engine& engine) {
    std::istringstream is(get_string());
    is >> engine;
    if (!is) throw CheckpointError(context_ + ": malformed RNG state");
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  void expect_done() const {
    if (!done()) throw CheckpointError(context_ + ": trailing bytes");
  }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) fail();
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail() const { throw CheckpointError(context_ + ": truncated data"); }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string context_;
};

}  // namespace eva

#endif  // EVA_IO_HPP_
