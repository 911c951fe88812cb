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

// Deterministic discrete-event network. All time is integer ticks; events at
// the same tick are ordered by (node id, session id, pass index), then by
// insertion order.

#pragma once

#include <map>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "ddtlab/adversary.hpp"

namespace ddtlab::netsim {

using protocol::AbortReason;
using protocol::Envelope;

inline const NodeId kEve = "eve";

class Topology {
 public:
  void add_node(const NodeId& id);
  // Symmetric; ticks must be positive.
  void set_latency(const NodeId& a, const NodeId& b, Tick ticks);
  void add_cut(const NodeId& a, const NodeId& b);

  bool has_node(const NodeId& id) const;
  bool has_link(const NodeId& a, const NodeId& b) const;
  // Throws Errc::config for an unknown link.
  Tick latency(const NodeId& a, const NodeId& b) const;
  bool in_cut(const NodeId& a, const NodeId& b) const;

  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::map<std::pair<NodeId, NodeId>, Tick>& links() const { return latency_; }
  const std::set<std::pair<NodeId, NodeId>>& cut() const { return cut_; }

 private:
  static std::pair<NodeId, NodeId> key(const NodeId& a, const NodeId& b);

  std::vector<NodeId> nodes_;
  std::map<std::pair<NodeId, NodeId>, Tick> latency_;
  std::set<std::pair<NodeId, NodeId>> cut_;
};

enum class EventKind { send, recv, lock, unlock, verify_ok, verify_fail, abort, open, handshake };

std::string_view to_string(EventKind k);

struct TraceEvent {
  Tick tick = 0;
  NodeId node;
  EventKind kind = EventKind::send;
  std::uint64_t session_id = 0;
  std::optional<int> pass_index;
  // Present on send and recv events.
  std::optional<Envelope> envelope;
  // Present on abort events.
  std::optional<AbortReason> reason;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  // Canonical scenario JSON the run was produced from.
  std::string config;
};

std::string envelope_json(const Envelope& env);
// Header line followed by one line per event, each newline-terminated.
std::string to_jsonl(const Trace& trace);

enum class ItemKind { deliver, emit, timer };

struct QueueItem {
  Tick tick = 0;
  NodeId node;  // receiver for deliver, sender for emit, owner for timer
  std::uint64_t session_id = 0;
  int pass_index = 0;
  std::uint64_t seq = 0;
  ItemKind kind = ItemKind::deliver;
  Envelope env;
  NodeId to;  // final destination of an emission
  bool forged = false;
  protocol::Phase timer_phase = protocol::Phase::idle;
};

class EventQueue {
 public:
  void push(QueueItem item);
  QueueItem pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const QueueItem& a, const QueueItem& b) const;
  };
  std::priority_queue<QueueItem, std::vector<QueueItem>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

// Enqueues delivery of env at now + latency(from, to). A link on the cut is
// diverted to Eve when an adversary is active. Returns the delivery tick.
Tick schedule(EventQueue& queue, const Topology& topology, bool adversary_active,
              const Envelope& env, const NodeId& from, const NodeId& to, Tick now,
              bool forged = false);

struct PartySetup {
  NodeId id;
  crypto::LockKey key;
  Tick processing = 0;
  // Extra hold per round before emitting (delay signature); may be empty.
  std::vector<Tick> holds;
  std::optional<crypto::SharedSecret> identity;
};

// A fully materialized run: keys, secrets and seeds already derived.
struct RunSetup {
  protocol::Variant variant = protocol::Variant::DL;
  Topology topology;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  std::string config;
  PartySetup initiator;
  PartySetup responder;
  std::optional<adversary::EveState> eve;
  std::vector<Bytes> secrets;  // one per round
  std::uint64_t authority_seed = 0;
  std::uint64_t letter_seed = 0;
  std::size_t r_size = protocol::Authority::kRSize;
  bool sign_pass3 = true;
  Tick timeout_ticks = 40;
};

struct RoundOutcome {
  std::uint64_t session_id = 0;
  Tick origin = 0;
  Tick end = 0;
  Bytes sent;
  std::optional<Bytes> recovered;
  std::optional<Bytes> adversary_recovered;
  protocol::Phase initiator_phase = protocol::Phase::idle;
  protocol::Phase responder_phase = protocol::Phase::idle;
  std::optional<AbortReason> initiator_abort;
  std::optional<AbortReason> responder_abort;
  bool responder_opened_forged = false;
  std::optional<bool> authenticated;
};

struct RunResult {
  Trace trace;
  std::vector<RoundOutcome> rounds;
  std::optional<crypto::SharedSecret> shared_R;
};

// Rounds run back to back: round r+1 starts at the last logged tick of round r.
RunResult run(const RunSetup& setup);

}  // namespace ddtlab::netsim
