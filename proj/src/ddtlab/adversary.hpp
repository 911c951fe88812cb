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

// The man in the middle. Eve sits on every link of the scenario's cut and
// sees each envelope crossing it; eve_step() decides what goes out instead.
//
// Eve is never registered with the authority, so she cannot hold R. Against
// signed traffic she either signs with a guessed R (FakeGift), copies the
// signatures she saw (DelayedRelay) or swaps in recorded ones (Replay).

#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ddtlab/protocol.hpp"

namespace ddtlab::adversary {

using protocol::Envelope;
using protocol::SessionState;

enum class Strategy { PassiveForward, FakeGift, DelayedRelay, Replay };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct Outgoing {
  Envelope env;
  NodeId destination;
  Tick send_tick = 0;
  // True when the content did not come byte-identical from an honest party.
  bool forged = false;
};

enum class ActionKind { lock, unlock, open };

struct Action {
  ActionKind kind;
  std::uint64_t session_id;
  int pass_index;
  Tick tick;
};

struct EveState {
  Strategy strategy = Strategy::PassiveForward;
  crypto::LockKey own_key;
  Bytes fake_gift;
  Tick processing_delay = 0;
  // Mirror the hold times observed on each side (one round late on the
  // responder side) to imitate honest delay signatures.
  bool mimic_delays = false;
  // Stand-in for R when Eve has to sign something herself.
  std::optional<crypto::SharedSecret> guessed_R;
  std::map<NodeId, Tick> latency_to;
  // Unordered node pairs Eve controls.
  std::set<std::pair<NodeId, NodeId>> cut;

  std::optional<SessionState> session_with_alice;
  std::optional<SessionState> session_with_bob;
  std::optional<Bytes> recovered;
  std::vector<Envelope> recorded_envelopes;
  std::vector<Action> actions;

  // Bookkeeping for the current session.
  std::uint64_t current_session = 0;
  std::optional<Envelope> initiator_pass1;
  std::optional<Envelope> initiator_pass3;
  Tick initiator_pass2_sent = 0;
  Tick responder_pass1_sent = 0;
  Tick initiator_hold = 0;
  Tick last_responder_hold = 0;
  std::optional<crypto::LockKey> box_key;
};

bool on_cut(const EveState& eve, const NodeId& a, const NodeId& b);

// Throws not_interceptable for envelopes that do not cross Eve's cut.
std::vector<Outgoing> eve_step(EveState& eve, const Envelope& intercepted, Tick tick);

// Earliest recorded signature; throws no_material when nothing was recorded.
crypto::Digest replay_signature(const EveState& eve, int target_pass);

}  // namespace ddtlab::adversary
