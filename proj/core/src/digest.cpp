// Copyright 2026 The latentsplit Authors
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

#include "latentsplit/digest.hpp"

#include <cstdio>

namespace latentsplit {

Fnv1a& Fnv1a::update(std::span<const std::byte> bytes) {
  for (const auto b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Fnv1a& Fnv1a::update(std::string_view text) {
  update(std::as_bytes(std::span(text.data(), text.size())));
  // Length terminator keeps ("ab","c") distinct from ("a","bc").
  return update_u64(text.size());
}

Fnv1a& Fnv1a::update_u64(std::uint64_t value) {
  std::byte bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<std::byte>((value >> (8 * i)) & 0xff);
  }
  return update(std::span<const std::byte>(bytes, 8));
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(state_));
  return buf;
}

std::string digest_hex(std::string_view text) {
  return Fnv1a().update(text).hex();
}

}  // namespace latentsplit
