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

#include "ddtlab/commute_crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <bit>
#include <limits>
#include <numeric>
#include <random>

namespace ddtlab::crypto {

std::string_view to_string(Backend b) {
  return b == Backend::xor_pad ? "xor-pad" : "exp-mod-p";
}

Backend backend_from_string(std::string_view s) {
  if (s == "xor-pad") return Backend::xor_pad;
  if (s == "exp-mod-p") return Backend::exp_mod_p;
  fail(Errc::invalid_parameter, "unknown backend '" + std::string(s) + "'");
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  if (m == 1) return 0;
  std::uint64_t result = 1;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  static constexpr std::uint64_t kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (std::uint64_t p : kBases) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These bases are a deterministic witness set for all n < 2^64.
  for (std::uint64_t a : kBases) {
    std::uint64_t x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m) {
  __int128 old_r = a % m, r = m;
  __int128 old_s = 1, s = 0;
  while (r != 0) {
    __int128 q = old_r / r;
    __int128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) fail(Errc::invalid_parameter, "value is not invertible modulo m");
  __int128 mm = m;
  return static_cast<std::uint64_t>(((old_s % mm) + mm) % mm);
}

LockKey LockKey::xor_pad(Bytes keystream) {
  if (keystream.empty()) fail(Errc::invalid_parameter, "xor-pad keystream is empty");
  LockKey k;
  k.backend_ = Backend::xor_pad;
  k.keystream_ = std::move(keystream);
  return k;
}

LockKey LockKey::exp_mod_p(std::uint64_t p, std::uint64_t e) {
  if (p < 5) fail(Errc::invalid_parameter, "exp-mod-p prime must be >= 5");
  if (!is_prime(p)) fail(Errc::invalid_parameter, "exp-mod-p modulus is not prime");
  if (e <= 1 || e >= p - 1) fail(Errc::invalid_parameter, "lock exponent out of range (1, p-1)");
  if (std::gcd(e, p - 1) != 1) fail(Errc::invalid_parameter, "lock exponent not coprime to p-1");
  LockKey k;
  k.backend_ = Backend::exp_mod_p;
  k.p_ = p;
  k.e_ = e;
  k.d_ = inverse_mod(e, p - 1);
  return k;
}

LockKey LockKey::lock_half() const {
  LockKey k = *this;
  if (backend_ == Backend::exp_mod_p) {
    k.d_ = 0;
    k.can_unlock_ = false;
  }
  return k;
}

Digest Digest::from_bytes(ByteView raw) {
  if (raw.size() != 32) fail(Errc::invalid_parameter, "digest must be exactly 32 bytes");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

SharedSecret::SharedSecret(Bytes bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < kMinSize) {
    fail(Errc::invalid_parameter, "shared secret must be at least 16 bytes");
  }
}

LockKey keygen_xor(std::uint64_t seed, std::size_t len) {
  if (len == 0) fail(Errc::invalid_parameter, "keystream length must be >= 1");
  std::mt19937_64 rng(seed);
  Bytes ks(len);
  for (std::size_t i = 0; i < len; i += 8) {
    std::uint64_t word = rng();
    for (std::size_t j = 0; j < 8 && i + j < len; ++j) {
      ks[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
    }
  }
  return LockKey::xor_pad(std::move(ks));
}

LockKey keygen_exp(std::uint64_t p, std::uint64_t seed) {
  if (p < 5) fail(Errc::invalid_parameter, "exp-mod-p prime must be >= 5");
  if (!is_prime(p)) fail(Errc::invalid_parameter, "exp-mod-p modulus is not prime");
  std::mt19937_64 rng(seed);
  const std::uint64_t span = p - 3;  // candidates 2 .. p-2
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  for (;;) {
    std::uint64_t r = rng();
    if (r >= limit) continue;
    std::uint64_t e = 2 + r % span;
    if (std::gcd(e, p - 1) == 1) return LockKey::exp_mod_p(p, e);
  }
}

Bytes encode_be(std::uint64_t v) {
  Bytes out;
  while (v != 0) {
    out.insert(out.begin(), static_cast<std::uint8_t>(v & 0xff));
    v >>= 8;
  }
  return out;
}

std::optional<std::uint64_t> decode_be(ByteView b) {
  if (b.size() > 8) return std::nullopt;
  std::uint64_t v = 0;
  for (std::uint8_t x : b) v = (v << 8) | x;
  return v;
}

namespace {

Bytes xor_apply(const LockKey& key, ByteView m) {
  const Bytes& ks = key.keystream();
  if (m.size() > ks.size()) fail(Errc::invalid_payload, "payload longer than xor-pad keystream");
  Bytes out(m.begin(), m.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= ks[i];
  return out;
}

std::uint64_t residue_of(const LockKey& key, ByteView m) {
  auto v = decode_be(m);
  if (!v || *v == 0 || *v >= key.prime()) {
    fail(Errc::invalid_payload, "payload is not a residue in [1, p)");
  }
  return *v;
}

// Calls fn(residue) for each block of a framed exp-mod-p message.
template <typename Fn>
Bytes map_blocks(ByteView msg, Fn&& fn) {
  Bytes out;
  std::size_t i = 0;
  while (i < msg.size()) {
    std::size_t len = msg[i];
    if (len == 0 || len > 8 || i + 1 + len > msg.size()) {
      fail(Errc::invalid_payload, "malformed block framing");
    }
    ByteView block = msg.subspan(i + 1, len);
    if (block[0] == 0) fail(Errc::invalid_payload, "block residue is not minimally encoded");
    Bytes mapped = fn(block);
    out.push_back(static_cast<std::uint8_t>(mapped.size()));
    out.insert(out.end(), mapped.begin(), mapped.end());
    i += 1 + len;
  }
  return out;
}

}  // namespace

Bytes lock(const LockKey& key, ByteView m) {
  if (key.backend() == Backend::xor_pad) return xor_apply(key, m);
  return encode_be(pow_mod(residue_of(key, m), key.lock_exponent(), key.prime()));
}

Bytes unlock(const LockKey& key, ByteView c) {
  if (key.backend() == Backend::xor_pad) return xor_apply(key, c);
  if (!key.can_unlock()) fail(Errc::invalid_parameter, "key holds only the lock half");
  return encode_be(pow_mod(residue_of(key, c), key.unlock_exponent(), key.prime()));
}

Bytes lock_message(const LockKey& key, ByteView msg) {
  if (key.backend() == Backend::xor_pad) return lock(key, msg);
  return map_blocks(msg, [&](ByteView b) { return lock(key, b); });
}

Bytes unlock_message(const LockKey& key, ByteView msg) {
  if (key.backend() == Backend::xor_pad) return unlock(key, msg);
  return map_blocks(msg, [&](ByteView b) { return unlock(key, b); });
}

std::size_t block_capacity(std::uint64_t p) {
  // Marker byte 0x01 plus c payload bytes stays below 2^(8c+1) <= p/2.
  int bits = 64 - std::countl_zero(p);
  return bits < 2 ? 0 : static_cast<std::size_t>((bits - 2) / 8);
}

Bytes pack_message(const LockKey& key, ByteView plain) {
  if (key.backend() == Backend::xor_pad) return Bytes(plain.begin(), plain.end());
  const std::size_t cap = block_capacity(key.prime());
  if (cap == 0) fail(Errc::invalid_parameter, "prime too small to carry byte payloads");
  Bytes out;
  for (std::size_t i = 0; i < plain.size(); i += cap) {
    std::size_t n = std::min(cap, plain.size() - i);
    out.push_back(static_cast<std::uint8_t>(n + 1));
    out.push_back(0x01);
    out.insert(out.end(), plain.begin() + static_cast<std::ptrdiff_t>(i),
               plain.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

Bytes unpack_message(const LockKey& key, ByteView msg) {
  if (key.backend() == Backend::xor_pad) return Bytes(msg.begin(), msg.end());
  Bytes out;
  std::size_t i = 0;
  while (i < msg.size()) {
    std::size_t len = msg[i];
    if (len < 1 || len > 8 || i + 1 + len > msg.size() || msg[i + 1] != 0x01) {
      fail(Errc::invalid_payload, "malformed packed block");
    }
    out.insert(out.end(), msg.begin() + static_cast<std::ptrdiff_t>(i + 2),
               msg.begin() + static_cast<std::ptrdiff_t>(i + 1 + len));
    i += 1 + len;
  }
  return out;
}

Digest digest(ByteView data) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != d.bytes.size()) {
    fail(Errc::internal, "SHA-256 computation failed");
  }
  return d;
}

Digest sign(const SharedSecret& r, ByteView payload) {
  Bytes buf = r.bytes();
  buf.insert(buf.end(), payload.begin(), payload.end());
  return digest(buf);
}

bool verify(const SharedSecret& r, ByteView payload, const Digest& sig) {
  Digest expected = sign(r, payload);
  return CRYPTO_memcmp(expected.bytes.data(), sig.bytes.data(), expected.bytes.size()) == 0;
}

}  // namespace ddtlab::crypto
