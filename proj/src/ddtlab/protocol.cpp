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

#include "ddtlab/protocol.hpp"

#include <algorithm>
#include <random>

namespace ddtlab::protocol {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::DL: return "DL";
    case Variant::DDT: return "DDT";
    case Variant::Implicit: return "Implicit";
    case Variant::PiggyBank: return "PiggyBank";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::awaiting_pass2: return "awaiting_pass2";
    case Phase::awaiting_pass3: return "awaiting_pass3";
    case Phase::done: return "done";
    case Phase::aborted: return "aborted";
  }
  return "?";
}

std::string_view to_string(AbortReason r) {
  switch (r) {
    case AbortReason::signature_mismatch: return "signature-mismatch";
    case AbortReason::decode_failure: return "decode-failure";
    case AbortReason::timeout: return "timeout";
  }
  return "?";
}

Variant variant_from_string(std::string_view s) {
  if (s == "DL") return Variant::DL;
  if (s == "DDT") return Variant::DDT;
  if (s == "Implicit") return Variant::Implicit;
  if (s == "PiggyBank") return Variant::PiggyBank;
  fail(Errc::invalid_parameter, "unknown variant '" + std::string(s) + "'");
}

SessionState make_session(Role role, Variant variant, NodeId self, NodeId peer,
                          std::uint64_t session_id, LockKey key) {
  SessionState st;
  st.role = role;
  st.variant = variant;
  st.self = std::move(self);
  st.peer = std::move(peer);
  st.session_id = session_id;
  st.own_key = std::move(key);
  return st;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) fail(Errc::protocol_order, what);
}

void require_step(const SessionState& st, Role role, Phase phase, const Envelope* env,
                  int pass) {
  require(st.role == role, "step not valid for this role");
  require(st.phase == phase, "step not valid in current phase");
  if (env != nullptr) require(env->pass_index == pass, "unexpected pass index");
}

Tick arrival(const Envelope& env, Tick now) { return env.received_tick.value_or(now); }

Envelope outgoing(const SessionState& st, int pass, Bytes payload) {
  Envelope env;
  env.session_id = st.session_id;
  env.variant = st.variant;
  env.pass_index = pass;
  env.payload = std::move(payload);
  env.sender = st.self;
  env.receiver = st.peer;
  return env;
}

void abort_session(SessionState& st, AbortReason reason) {
  st.phase = Phase::aborted;
  st.abort_reason = reason;
}

const SharedSecret& require_r(const SessionState& st) {
  if (!st.shared_R) fail(Errc::invalid_state, "session has no shared R");
  return *st.shared_R;
}

bool signature_ok(const SessionState& st, const Envelope& env) {
  return env.signature && crypto::verify(*st.shared_R, env.payload, *env.signature);
}

}  // namespace

Envelope dl_pass1(SessionState& st, ByteView secret, Tick now) {
  require_step(st, Role::initiator, Phase::idle, nullptr, 0);
  Envelope env = outgoing(st, 1, crypto::lock_message(st.own_key, secret));
  st.secret_S.assign(secret.begin(), secret.end());
  st.phase = Phase::awaiting_pass2;
  st.timing_log.push_back({ExchangeKind::send, now});
  return env;
}

std::optional<Envelope> dl_pass2(SessionState& st, const Envelope& env, Tick now) {
  require_step(st, Role::responder, Phase::idle, &env, 1);
  st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
  try {
    Envelope out = outgoing(st, 2, crypto::lock_message(st.own_key, env.payload));
    st.phase = Phase::awaiting_pass3;
    return out;
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_payload) throw;
    abort_session(st, AbortReason::decode_failure);
    return std::nullopt;
  }
}

std::optional<Envelope> dl_pass3(SessionState& st, const Envelope& env, Tick now) {
  require_step(st, Role::initiator, Phase::awaiting_pass2, &env, 2);
  st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
  try {
    Envelope out = outgoing(st, 3, crypto::unlock_message(st.own_key, env.payload));
    st.phase = Phase::done;
    return out;
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_payload) throw;
    abort_session(st, AbortReason::decode_failure);
    return std::nullopt;
  }
}

std::optional<Bytes> dl_open(SessionState& st, const Envelope& env, Tick now) {
  require_step(st, Role::responder, Phase::awaiting_pass3, &env, 3);
  st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
  try {
    Bytes s = crypto::unlock_message(st.own_key, env.payload);
    st.recovered_S = s;
    st.phase = Phase::done;
    return s;
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_payload) throw;
    abort_session(st, AbortReason::decode_failure);
    return std::nullopt;
  }
}

Envelope ddt_pass1(SessionState& st, ByteView secret, Tick now) {
  require(st.variant == Variant::DDT, "not a DDT session");
  const SharedSecret& r = require_r(st);
  Envelope env = dl_pass1(st, secret, now);
  env.signature = crypto::sign(r, env.payload);
  return env;
}

std::optional<Envelope> ddt_pass2(SessionState& st, const Envelope& env, Tick now) {
  require(st.variant == Variant::DDT, "not a DDT session");
  require_r(st);
  require_step(st, Role::responder, Phase::idle, &env, 1);
  if (!signature_ok(st, env)) {
    st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
    abort_session(st, AbortReason::signature_mismatch);
    return std::nullopt;
  }
  auto out = dl_pass2(st, env, now);
  if (out) out->signature = crypto::sign(*st.shared_R, out->payload);
  return out;
}

std::optional<Envelope> ddt_pass3(SessionState& st, const Envelope& env, Tick now) {
  require(st.variant == Variant::DDT, "not a DDT session");
  require_r(st);
  require_step(st, Role::initiator, Phase::awaiting_pass2, &env, 2);
  if (!signature_ok(st, env)) {
    st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
    abort_session(st, AbortReason::signature_mismatch);
    return std::nullopt;
  }
  auto out = dl_pass3(st, env, now);
  if (out && st.sign_pass3) out->signature = crypto::sign(*st.shared_R, out->payload);
  return out;
}

std::optional<Bytes> ddt_open(SessionState& st, const Envelope& env, Tick now) {
  require(st.variant == Variant::DDT, "not a DDT session");
  require_r(st);
  require_step(st, Role::responder, Phase::awaiting_pass3, &env, 3);
  if (st.sign_pass3 && !signature_ok(st, env)) {
    st.timing_log.push_back({ExchangeKind::recv, arrival(env, now)});
    abort_session(st, AbortReason::signature_mismatch);
    return std::nullopt;
  }
  return dl_open(st, env, now);
}

Bytes chain_encode(ByteView s, ByteView prev) {
  Bytes out(std::max(s.size(), prev.size()), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned a = i < s.size() ? s[i] : 0;
    unsigned b = i < prev.size() ? prev[i] : 0;
    out[i] = static_cast<std::uint8_t>(a + b);
  }
  return out;
}

Bytes chain_decode(ByteView payload, ByteView prev) {
  Bytes out(std::max(payload.size(), prev.size()), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned a = i < payload.size() ? payload[i] : 0;
    unsigned b = i < prev.size() ? prev[i] : 0;
    out[i] = static_cast<std::uint8_t>(a - b);
  }
  return out;
}

void Authority::register_party(const NodeId& id, SharedSecret identity) {
  identities_.insert_or_assign(id, std::move(identity));
}

const SharedSecret* Authority::identity_on_file(const NodeId& id) const {
  auto it = identities_.find(id);
  return it == identities_.end() ? nullptr : &it->second;
}

SharedSecret Authority::handshake(std::uint64_t authority_seed, SessionState& a, SessionState& b,
                                  std::size_t r_size) const {
  if (!is_registered(a.self) || !is_registered(b.self)) {
    fail(Errc::invalid_state, "handshake with an unregistered party");
  }
  std::mt19937_64 rng(authority_seed);
  Bytes r(std::max(r_size, SharedSecret::kMinSize));
  for (auto& byte : r) byte = static_cast<std::uint8_t>(rng() >> 56);
  SharedSecret secret(std::move(r));
  a.shared_R = secret;
  b.shared_R = secret;
  return secret;
}

PiggyBox pb_issue_box(SessionState& responder) {
  require(responder.variant == Variant::PiggyBank, "not a piggy-bank session");
  require_step(responder, Role::responder, Phase::idle, nullptr, 0);
  responder.phase = Phase::awaiting_pass2;
  PiggyBox box;
  box.box_key = responder.own_key.lock_half();
  return box;
}

Bytes pb_seal_layout(ByteView secret, ByteView letter_key) {
  if (secret.size() > 0xffff) fail(Errc::invalid_parameter, "secret too long for a piggy box");
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(secret.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(secret.size() & 0xff));
  out.insert(out.end(), secret.begin(), secret.end());
  out.insert(out.end(), letter_key.begin(), letter_key.end());
  return out;
}

PiggyBox pb_deposit(SessionState& initiator, PiggyBox box, ByteView secret, ByteView manifest,
                    std::uint64_t letter_seed) {
  require(initiator.variant == Variant::PiggyBank, "not a piggy-bank session");
  require_step(initiator, Role::initiator, Phase::idle, nullptr, 0);
  if (box.sealed_contents) fail(Errc::invalid_state, "piggy box already holds contents");
  if (!initiator.identity) fail(Errc::invalid_state, "initiator has no identity key on file");
  if (manifest.empty()) fail(Errc::invalid_parameter, "letter manifest is empty");

  LockKey letter_key = crypto::keygen_xor(letter_seed, manifest.size());
  box.letter_ciphertext = crypto::lock(letter_key, manifest);
  box.letter_signature = crypto::sign(*initiator.identity, manifest);
  Bytes contents = pb_seal_layout(secret, letter_key.keystream());
  box.sealed_contents =
      crypto::lock_message(box.box_key, crypto::pack_message(box.box_key, contents));

  initiator.secret_S.assign(secret.begin(), secret.end());
  initiator.phase = Phase::done;
  return box;
}

PiggyOpening pb_open(SessionState& responder, const PiggyBox& box, const Authority& registry) {
  require(responder.variant == Variant::PiggyBank, "not a piggy-bank session");
  require_step(responder, Role::responder, Phase::awaiting_pass2, nullptr, 0);
  if (!box.sealed_contents) fail(Errc::invalid_state, "piggy box is empty");
  if (!box.letter_ciphertext || !box.letter_signature) {
    fail(Errc::incomplete_delivery, "signed letter has not arrived");
  }

  Bytes contents;
  try {
    contents = crypto::unpack_message(
        responder.own_key, crypto::unlock_message(responder.own_key, *box.sealed_contents));
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_payload) throw;
    abort_session(responder, AbortReason::decode_failure);
    fail(Errc::decode_failure, "sealed contents do not decode");
  }
  if (contents.size() < 2) {
    abort_session(responder, AbortReason::decode_failure);
    fail(Errc::decode_failure, "sealed contents too short");
  }
  std::size_t secret_len = (std::size_t{contents[0]} << 8) | contents[1];
  if (contents.size() < 2 + secret_len) {
    abort_session(responder, AbortReason::decode_failure);
    fail(Errc::decode_failure, "sealed contents truncated");
  }

  PiggyOpening opening;
  auto secret_end = contents.begin() + 2 + static_cast<std::ptrdiff_t>(secret_len);
  opening.secret.assign(contents.begin() + 2, secret_end);
  Bytes letter_key(secret_end, contents.end());

  const Bytes& letter = *box.letter_ciphertext;
  if (!letter.empty() && letter_key.size() == letter.size()) {
    opening.manifest = crypto::unlock(LockKey::xor_pad(letter_key), letter);
  } else {
    // A substituted box cannot carry the key of the original letter.
    opening.manifest = letter;
  }

  const SharedSecret* on_file = registry.identity_on_file(responder.peer);
  opening.authenticated =
      on_file != nullptr && crypto::verify(*on_file, opening.manifest, *box.letter_signature);

  responder.recovered_S = opening.secret;
  if (opening.authenticated) {
    responder.phase = Phase::done;
  } else {
    abort_session(responder, AbortReason::signature_mismatch);
  }
  return opening;
}

Bytes encode_lock_half(const LockKey& key) {
  Bytes out;
  if (key.backend() == crypto::Backend::xor_pad) {
    out.push_back(0x01);
    out.insert(out.end(), key.keystream().begin(), key.keystream().end());
    return out;
  }
  out.push_back(0x02);
  for (std::uint64_t v : {key.prime(), key.lock_exponent()}) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return out;
}

LockKey decode_lock_half(ByteView payload) {
  if (payload.empty()) fail(Errc::decode_failure, "empty box key");
  if (payload[0] == 0x01) return LockKey::xor_pad(Bytes(payload.begin() + 1, payload.end()));
  if (payload[0] != 0x02 || payload.size() != 17) fail(Errc::decode_failure, "malformed box key");
  std::uint64_t p = *crypto::decode_be(payload.subspan(1, 8));
  std::uint64_t e = *crypto::decode_be(payload.subspan(9, 8));
  try {
    return LockKey::exp_mod_p(p, e).lock_half();
  } catch (const Error&) {
    fail(Errc::decode_failure, "box key parameters are invalid");
  }
}

Bytes encode_letter(const PiggyBox& box) {
  if (!box.letter_ciphertext || !box.letter_signature) {
    fail(Errc::incomplete_delivery, "box carries no letter");
  }
  Bytes out = *box.letter_ciphertext;
  out.insert(out.end(), box.letter_signature->bytes.begin(), box.letter_signature->bytes.end());
  return out;
}

void decode_letter(ByteView payload, PiggyBox& box) {
  if (payload.size() < 32) fail(Errc::decode_failure, "letter shorter than its signature");
  const std::size_t body = payload.size() - 32;
  box.letter_ciphertext = Bytes(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(body));
  box.letter_signature = Digest::from_bytes(payload.subspan(body));
}

bool compare_digests(const Digest& sent_digest, ByteView received_payload) {
  return crypto::digest(received_payload) == sent_digest;
}

}  // namespace ddtlab::protocol
