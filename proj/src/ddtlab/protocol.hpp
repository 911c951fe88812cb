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

// Message constructors and per-party state machines for the three-pass
// double-lock exchange (plain, signed, implicitly chained) and the piggy-bank
// deposit.
//
// Receiving steps return std::nullopt when the session aborts; the reason is
// left in SessionState::abort_reason. Calling a step out of order throws
// Errc::protocol_order and leaves the state untouched.

#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ddtlab/commute_crypto.hpp"

namespace ddtlab::protocol {

using crypto::Digest;
using crypto::LockKey;
using crypto::SharedSecret;

enum class Variant { DL, DDT, Implicit, PiggyBank };
enum class Role { initiator, responder };
enum class Phase { idle, awaiting_pass2, awaiting_pass3, done, aborted };
enum class AbortReason { signature_mismatch, decode_failure, timeout };

std::string_view to_string(Variant v);
std::string_view to_string(Phase p);
std::string_view to_string(AbortReason r);
Variant variant_from_string(std::string_view s);

struct Envelope {
  std::uint64_t session_id = 0;
  Variant variant = Variant::DL;
  int pass_index = 1;
  Bytes payload;
  std::optional<Digest> signature;
  NodeId sender;
  NodeId receiver;
  Tick sent_tick = 0;
  std::optional<Tick> received_tick;

  bool operator==(const Envelope&) const = default;
};

enum class ExchangeKind { send, recv };

struct TimingEntry {
  ExchangeKind kind;
  Tick tick;
};

struct SessionState {
  Role role = Role::initiator;
  Variant variant = Variant::DL;
  NodeId self;
  NodeId peer;
  std::uint64_t session_id = 0;
  LockKey own_key;
  std::optional<SharedSecret> shared_R;
  // Long-term identity key ("signature on file"), piggy-bank only.
  std::optional<SharedSecret> identity;
  bool sign_pass3 = true;

  Phase phase = Phase::idle;
  std::optional<AbortReason> abort_reason;
  std::vector<TimingEntry> timing_log;
  Bytes secret_S;
  std::optional<Bytes> recovered_S;

  bool terminal() const { return phase == Phase::done || phase == Phase::aborted; }
};

SessionState make_session(Role role, Variant variant, NodeId self, NodeId peer,
                          std::uint64_t session_id, LockKey key);

// Plain double lock. Also used for the implicitly chained variant, whose
// payload masking happens before pass 1 and after opening.
Envelope dl_pass1(SessionState& st, ByteView secret, Tick now = 0);
std::optional<Envelope> dl_pass2(SessionState& st, const Envelope& env, Tick now = 0);
std::optional<Envelope> dl_pass3(SessionState& st, const Envelope& env, Tick now = 0);
std::optional<Bytes> dl_open(SessionState& st, const Envelope& env, Tick now = 0);

// Double-signature double lock: every pass carries sign(R, payload).
Envelope ddt_pass1(SessionState& st, ByteView secret, Tick now = 0);
std::optional<Envelope> ddt_pass2(SessionState& st, const Envelope& env, Tick now = 0);
std::optional<Envelope> ddt_pass3(SessionState& st, const Envelope& env, Tick now = 0);
std::optional<Bytes> ddt_open(SessionState& st, const Envelope& env, Tick now = 0);

// Bytewise mod-256 masking; the shorter operand is zero-padded at the end, so
// the output has max(|s|, |prev|) bytes.
Bytes chain_encode(ByteView s, ByteView prev);
Bytes chain_decode(ByteView payload, ByteView prev);

// Distributes R and keeps the identity registry. Only registered parties can
// receive R.
class Authority {
 public:
  void register_party(const NodeId& id, SharedSecret identity);
  bool is_registered(const NodeId& id) const { return identities_.contains(id); }
  const SharedSecret* identity_on_file(const NodeId& id) const;

  // Derives R (kRSize bytes) from the seed and hands it to both parties.
  // Throws invalid_state if either party is not registered.
  SharedSecret handshake(std::uint64_t authority_seed, SessionState& a, SessionState& b,
                         std::size_t r_size = kRSize) const;

  static constexpr std::size_t kRSize = 16;

 private:
  std::map<NodeId, SharedSecret> identities_;
};

struct PiggyBox {
  LockKey box_key;  // lock half only once issued
  std::optional<Bytes> sealed_contents;
  std::optional<Bytes> letter_ciphertext;
  std::optional<Digest> letter_signature;
};

PiggyBox pb_issue_box(SessionState& responder);
// letter_seed drives the fresh one-time letter key.
PiggyBox pb_deposit(SessionState& initiator, PiggyBox box, ByteView secret, ByteView manifest,
                    std::uint64_t letter_seed);

struct PiggyOpening {
  Bytes secret;
  Bytes manifest;
  bool authenticated = false;
};

PiggyOpening pb_open(SessionState& responder, const PiggyBox& box, const Authority& registry);

// Wire forms used by the piggy-bank passes (see docs/FORMATS.md).
Bytes encode_lock_half(const LockKey& key);
LockKey decode_lock_half(ByteView payload);
Bytes encode_letter(const PiggyBox& box);
void decode_letter(ByteView payload, PiggyBox& box);

// Sealed contents layout: u16 BE |secret| || secret || letter keystream.
Bytes pb_seal_layout(ByteView secret, ByteView letter_key);

bool compare_digests(const Digest& sent_digest, ByteView received_payload);

}  // namespace ddtlab::protocol
