// Copyright 2026 The ddt-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ddtlab {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Logical simulation time. One tick is the unit of every timing figure.
using Tick = std::int64_t;

// Node ids are plain names ("alice", "bob", "eve").
using NodeId = std::string;

enum class Errc {
  invalid_parameter,
  invalid_payload,
  protocol_order,
  decode_failure,
  invalid_state,
  incomplete_delivery,
  insufficient_data,
  no_material,
  not_interceptable,
  unsupported,
  config,
  io,
  internal,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

std::string to_hex(ByteView data);
// Throws invalid_parameter on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

inline Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Seed splitting: derive_seed(seed, stream) = splitmix64(seed + golden * (stream + 1)).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ddtlab
