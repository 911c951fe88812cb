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

// Commuting lock primitives, the SHA-256 digest and R-bound signatures.
//
// Two lock backends are provided:
//
//   xor-pad    Bytewise XOR with a keystream. Trivially commutative, but a
//              passive observer who records all three passes of a double-lock
//              exchange recovers the secret as the XOR of the transcripts.
//              Useful as a transparent teaching backend only.
//   exp-mod-p  Exponentiation cipher m -> m^e mod p with e*d = 1 (mod p-1).
//              Locks under the same prime commute. This is the default.
//
// Neither backend offers real-world security; primes are at most 64 bits.
//
// lock()/unlock() act on a single unit: the whole byte string for xor-pad, a
// single residue 1 <= m < p (big-endian bytes) for exp-mod-p. Protocol
// payloads go through lock_message()/unlock_message(), which for exp-mod-p
// apply the primitive to each block of a framed residue list (see
// docs/FORMATS.md). pack_message() turns arbitrary bytes into such a list.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "ddtlab/common.hpp"

namespace ddtlab::crypto {

enum class Backend { xor_pad, exp_mod_p };

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view s);

class LockKey {
 public:
  LockKey() = default;

  static LockKey xor_pad(Bytes keystream);
  // Validates p and e, derives d = e^-1 mod (p-1).
  static LockKey exp_mod_p(std::uint64_t p, std::uint64_t e);

  Backend backend() const { return backend_; }

  const Bytes& keystream() const { return keystream_; }
  std::uint64_t prime() const { return p_; }
  std::uint64_t lock_exponent() const { return e_; }
  std::uint64_t unlock_exponent() const { return d_; }

  // False for a lock half handed out to other parties.
  bool can_unlock() const { return can_unlock_; }
  LockKey lock_half() const;

  bool operator==(const LockKey&) const = default;

 private:
  Backend backend_ = Backend::xor_pad;
  Bytes keystream_;
  std::uint64_t p_ = 0;
  std::uint64_t e_ = 0;
  std::uint64_t d_ = 0;
  bool can_unlock_ = true;
};

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static Digest from_bytes(ByteView raw);  // raw must be exactly 32 bytes

  bool operator==(const Digest&) const = default;
};

class SharedSecret {
 public:
  static constexpr std::size_t kMinSize = 16;

  explicit SharedSecret(Bytes bytes);

  const Bytes& bytes() const { return bytes_; }
  bool operator==(const SharedSecret&) const = default;

 private:
  Bytes bytes_;
};

// Number theory helpers, exposed for tests and for scenario validation.
bool is_prime(std::uint64_t n);
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m);
std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m);
// Inverse of a modulo m; throws invalid_parameter when gcd(a, m) != 1.
std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m);

LockKey keygen_xor(std::uint64_t seed, std::size_t len);
LockKey keygen_exp(std::uint64_t p, std::uint64_t seed);

Bytes lock(const LockKey& key, ByteView m);
Bytes unlock(const LockKey& key, ByteView c);

Bytes lock_message(const LockKey& key, ByteView msg);
Bytes unlock_message(const LockKey& key, ByteView msg);

// Plain bytes -> lockable message. Identity for xor-pad.
Bytes pack_message(const LockKey& key, ByteView plain);
Bytes unpack_message(const LockKey& key, ByteView msg);
// Bytes of plaintext per exp-mod-p block; 0 when p is too small to carry any.
std::size_t block_capacity(std::uint64_t p);

Digest digest(ByteView data);
Digest sign(const SharedSecret& r, ByteView payload);
bool verify(const SharedSecret& r, ByteView payload, const Digest& sig);

// Minimal big-endian encoding; zero encodes as an empty string.
Bytes encode_be(std::uint64_t v);
std::optional<std::uint64_t> decode_be(ByteView b);

}  // namespace ddtlab::crypto
