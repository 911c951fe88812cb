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

#include "ddtlab/adversary.hpp"

namespace ddtlab::adversary {

using protocol::Role;
using protocol::Variant;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::PassiveForward: return "PassiveForward";
    case Strategy::FakeGift: return "FakeGift";
    case Strategy::DelayedRelay: return "DelayedRelay";
    case Strategy::Replay: return "Replay";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "PassiveForward") return Strategy::PassiveForward;
  if (s == "FakeGift") return Strategy::FakeGift;
  if (s == "DelayedRelay") return Strategy::DelayedRelay;
  if (s == "Replay") return Strategy::Replay;
  fail(Errc::invalid_parameter, "unknown adversary strategy '" + std::string(s) + "'");
}

bool on_cut(const EveState& eve, const NodeId& a, const NodeId& b) {
  return eve.cut.contains({a, b}) || eve.cut.contains({b, a});
}

crypto::Digest replay_signature(const EveState& eve, int /*target_pass*/) {
  for (const Envelope& env : eve.recorded_envelopes) {
    if (env.signature) return *env.signature;
  }
  fail(Errc::no_material, "no recorded signature to replay");
}

namespace {

Tick latency(const EveState& eve, const NodeId& n) {
  auto it = eve.latency_to.find(n);
  return it == eve.latency_to.end() ? 0 : it->second;
}

Outgoing forward(const EveState& eve, const Envelope& env, Tick tick) {
  return {env, env.receiver, tick + eve.processing_delay, false};
}

std::optional<crypto::Digest> eve_signature(const EveState& eve, const Envelope& out,
                                            const Envelope* copy_from) {
  if (out.variant != Variant::DDT) return std::nullopt;
  if (eve.strategy == Strategy::FakeGift) {
    if (!eve.guessed_R) return std::nullopt;
    return crypto::sign(*eve.guessed_R, out.payload);
  }
  return copy_from != nullptr ? copy_from->signature : std::nullopt;
}

void start_session(EveState& eve, std::uint64_t session_id) {
  if (eve.current_session == session_id && eve.session_with_alice) return;
  eve.current_session = session_id;
  eve.session_with_alice.reset();
  eve.session_with_bob.reset();
  eve.recovered.reset();
  eve.initiator_pass1.reset();
  eve.initiator_pass3.reset();
}

// Eve in the middle of a three-pass exchange: she answers the initiator as
// if she were the responder and runs her own exchange with the responder.
std::vector<Outgoing> intercept_three_pass(EveState& eve, const Envelope& env, Tick tick) {
  std::vector<Outgoing> out;
  const Tick base = tick + eve.processing_delay;

  if (env.pass_index == 1) {
    start_session(eve, env.session_id);
    eve.initiator_pass1 = env;
    SessionState st = protocol::make_session(Role::responder, env.variant, env.receiver,
                                             env.sender, env.session_id, eve.own_key);
    auto reply = protocol::dl_pass2(st, env, tick);
    eve.session_with_alice = std::move(st);
    if (!reply) return out;
    eve.actions.push_back({ActionKind::lock, env.session_id, 2, tick});
    reply->signature = eve_signature(eve, *reply, &env);
    Tick send = base + (eve.mimic_delays ? eve.last_responder_hold : 0);
    eve.initiator_pass2_sent = send;
    out.push_back({std::move(*reply), env.sender, send, true});
    return out;
  }

  if (env.pass_index == 3) {
    if (!eve.session_with_alice || eve.session_with_alice->session_id != env.session_id) {
      return out;
    }
    eve.initiator_pass3 = env;
    eve.initiator_hold = std::max<Tick>(
        0, tick - eve.initiator_pass2_sent - 2 * latency(eve, env.sender));
    auto opened = protocol::dl_open(*eve.session_with_alice, env, tick);
    if (!opened) return out;
    eve.actions.push_back({ActionKind::open, env.session_id, 3, tick});
    // Raw residues (no packing layer) are taken, and substituted, as they are.
    bool packed = true;
    try {
      eve.recovered = crypto::unpack_message(eve.own_key, *opened);
    } catch (const Error&) {
      eve.recovered = *opened;
      packed = false;
    }

    // The responder-side exchange starts the moment the box is opened.
    Bytes message = *opened;
    if (eve.strategy == Strategy::FakeGift) {
      message = packed ? crypto::pack_message(eve.own_key, eve.fake_gift) : eve.fake_gift;
    }
    SessionState st = protocol::make_session(Role::initiator, env.variant, env.sender,
                                             env.receiver, env.session_id, eve.own_key);
    Envelope first = protocol::dl_pass1(st, message, tick);
    eve.session_with_bob = std::move(st);
    eve.actions.push_back({ActionKind::lock, env.session_id, 1, tick});
    first.signature = eve_signature(eve, first, eve.initiator_pass1 ? &*eve.initiator_pass1 : nullptr);
    eve.responder_pass1_sent = base;
    out.push_back({std::move(first), env.receiver, base, true});
    return out;
  }

  // Pass 2 comes from the responder, inside Eve's own exchange with them.
  if (!eve.session_with_bob || eve.session_with_bob->session_id != env.session_id) return out;
  eve.last_responder_hold = std::max<Tick>(
      0, tick - eve.responder_pass1_sent - 2 * latency(eve, env.sender));
  auto reply = protocol::dl_pass3(*eve.session_with_bob, env, tick);
  if (!reply) return out;
  eve.actions.push_back({ActionKind::unlock, env.session_id, 3, tick});
  reply->signature = eve_signature(eve, *reply, eve.initiator_pass3 ? &*eve.initiator_pass3 : nullptr);
  Tick send = base + (eve.mimic_delays ? eve.initiator_hold : 0);
  out.push_back({std::move(*reply), env.sender, send, true});
  return out;
}

std::vector<Outgoing> intercept_piggy_bank(EveState& eve, const Envelope& env, Tick tick) {
  std::vector<Outgoing> out;
  if (env.pass_index == 1) {
    try {
      eve.box_key = protocol::decode_lock_half(env.payload);
    } catch (const Error&) {
      eve.box_key.reset();
    }
  }
  if (eve.strategy == Strategy::FakeGift && env.pass_index == 2 && eve.box_key) {
    // Refill the box with the fake gift. Eve cannot know the letter key, so
    // she encloses one of her own.
    Bytes letter_key(32);
    for (std::size_t i = 0; i < letter_key.size(); ++i) {
      letter_key[i] = static_cast<std::uint8_t>(splitmix64(env.session_id + i) & 0xff);
    }
    Bytes contents = protocol::pb_seal_layout(eve.fake_gift, letter_key);
    Envelope swapped = env;
    swapped.payload =
        crypto::lock_message(*eve.box_key, crypto::pack_message(*eve.box_key, contents));
    eve.actions.push_back({ActionKind::lock, env.session_id, 2, tick});
    out.push_back({std::move(swapped), env.receiver, tick + eve.processing_delay, true});
    return out;
  }
  out.push_back(forward(eve, env, tick));
  return out;
}

}  // namespace

std::vector<Outgoing> eve_step(EveState& eve, const Envelope& intercepted, Tick tick) {
  if (!on_cut(eve, intercepted.sender, intercepted.receiver)) {
    fail(Errc::not_interceptable, "envelope does not cross the adversary's cut");
  }
  eve.recorded_envelopes.push_back(intercepted);

  if (intercepted.variant == Variant::PiggyBank) return intercept_piggy_bank(eve, intercepted, tick);

  switch (eve.strategy) {
    case Strategy::PassiveForward:
      return {forward(eve, intercepted, tick)};
    case Strategy::Replay: {
      Outgoing o = forward(eve, intercepted, tick);
      if (intercepted.pass_index > 1 && intercepted.signature) {
        crypto::Digest old = replay_signature(eve, intercepted.pass_index);
        if (old != *intercepted.signature) {
          o.env.signature = old;
          o.forged = true;
        }
      }
      return {o};
    }
    case Strategy::FakeGift:
    case Strategy::DelayedRelay:
      return intercept_three_pass(eve, intercepted, tick);
  }
  return {};
}

}  // namespace ddtlab::adversary
