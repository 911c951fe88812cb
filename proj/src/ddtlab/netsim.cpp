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

#include "ddtlab/netsim.hpp"

#include <algorithm>
#include <tuple>

#include "json.hpp"

namespace ddtlab::netsim {

using adversary::EveState;
using protocol::Phase;
using protocol::Role;
using protocol::SessionState;
using protocol::Variant;

std::pair<NodeId, NodeId> Topology::key(const NodeId& a, const NodeId& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void Topology::add_node(const NodeId& id) {
  if (!has_node(id)) nodes_.push_back(id);
}

void Topology::set_latency(const NodeId& a, const NodeId& b, Tick ticks) {
  if (a == b) fail(Errc::config, "link endpoints must differ: " + a);
  if (!has_node(a) || !has_node(b)) fail(Errc::config, "link references unknown node: " + a + "-" + b);
  if (ticks <= 0) fail(Errc::config, "latency must be positive on " + a + "-" + b);
  latency_[key(a, b)] = ticks;
}

void Topology::add_cut(const NodeId& a, const NodeId& b) {
  if (!has_link(a, b)) fail(Errc::config, "cut link is not declared: " + a + "-" + b);
  cut_.insert(key(a, b));
}

bool Topology::has_node(const NodeId& id) const {
  return std::find(nodes_.begin(), nodes_.end(), id) != nodes_.end();
}

bool Topology::has_link(const NodeId& a, const NodeId& b) const {
  return latency_.contains(key(a, b));
}

Tick Topology::latency(const NodeId& a, const NodeId& b) const {
  auto it = latency_.find(key(a, b));
  if (it == latency_.end()) fail(Errc::config, "unknown link " + a + "-" + b);
  return it->second;
}

bool Topology::in_cut(const NodeId& a, const NodeId& b) const { return cut_.contains(key(a, b)); }

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::send: return "send";
    case EventKind::recv: return "recv";
    case EventKind::lock: return "lock";
    case EventKind::unlock: return "unlock";
    case EventKind::verify_ok: return "verify-ok";
    case EventKind::verify_fail: return "verify-fail";
    case EventKind::abort: return "abort";
    case EventKind::open: return "open";
    case EventKind::handshake: return "handshake";
  }
  return "?";
}

namespace {

using Json = nlohmann::ordered_json;

Json envelope_object(const Envelope& env) {
  Json j;
  j["session_id"] = env.session_id;
  j["variant"] = protocol::to_string(env.variant);
  j["pass_index"] = env.pass_index;
  j["payload"] = to_hex(env.payload);
  j["signature"] = env.signature ? Json(env.signature->hex()) : Json(nullptr);
  j["sender"] = env.sender;
  j["receiver"] = env.receiver;
  j["sent_tick"] = env.sent_tick;
  j["received_tick"] = env.received_tick ? Json(*env.received_tick) : Json(nullptr);
  return j;
}

}  // namespace

std::string envelope_json(const Envelope& env) { return envelope_object(env).dump(); }

std::string to_jsonl(const Trace& trace) {
  std::string out;
  Json header;
  header["type"] = "header";
  header["seed"] = trace.seed;
  header["run"] = trace.run_index;
  header["config_digest"] = crypto::digest(bytes_of(trace.config)).hex();
  header["events"] = trace.events.size();
  out += header.dump();
  out += '\n';
  for (const TraceEvent& ev : trace.events) {
    Json j;
    j["tick"] = ev.tick;
    j["node"] = ev.node;
    j["kind"] = to_string(ev.kind);
    j["session_id"] = ev.session_id;
    j["pass_index"] = ev.pass_index ? Json(*ev.pass_index) : Json(nullptr);
    if (ev.envelope) j["envelope"] = envelope_object(*ev.envelope);
    if (ev.reason) j["reason"] = protocol::to_string(*ev.reason);
    out += j.dump();
    out += '\n';
  }
  return out;
}

bool EventQueue::Later::operator()(const QueueItem& a, const QueueItem& b) const {
  return std::tie(a.tick, a.node, a.session_id, a.pass_index, a.seq) >
         std::tie(b.tick, b.node, b.session_id, b.pass_index, b.seq);
}

void EventQueue::push(QueueItem item) {
  item.seq = next_seq_++;
  heap_.push(std::move(item));
}

QueueItem EventQueue::pop() {
  QueueItem top = heap_.top();
  heap_.pop();
  return top;
}

Tick schedule(EventQueue& queue, const Topology& topology, bool adversary_active,
              const Envelope& env, const NodeId& from, const NodeId& to, Tick now, bool forged) {
  if (from == to) fail(Errc::config, "node cannot send to itself: " + from);
  NodeId target = to;
  Tick at = now + topology.latency(from, to);
  if (adversary_active && from != kEve && to != kEve && topology.in_cut(from, to)) {
    target = kEve;
    at = now + topology.latency(from, kEve);
  }
  QueueItem item;
  item.tick = at;
  item.node = target;
  item.session_id = env.session_id;
  item.pass_index = env.pass_index;
  item.kind = ItemKind::deliver;
  item.env = env;
  item.forged = forged;
  queue.push(std::move(item));
  return at;
}

namespace {

constexpr std::size_t kMaxEvents = 1'000'000;

class Simulation {
 public:
  explicit Simulation(const RunSetup& setup) : setup_(setup) {
    if (setup_.eve) eve_ = *setup_.eve;
    authority_.register_party(setup_.initiator.id, identity_of(setup_.initiator, 1));
    authority_.register_party(setup_.responder.id, identity_of(setup_.responder, 2));
  }

  RunResult run() {
    Tick now = 0;
    for (std::size_t r = 0; r < setup_.secrets.size(); ++r) {
      now = run_round(r, now);
    }
    std::stable_sort(events_.begin(), events_.end(), [](const TraceEvent& a, const TraceEvent& b) {
      return std::tie(a.tick, a.node, a.session_id) < std::tie(b.tick, b.node, b.session_id) ||
             (std::tie(a.tick, a.node, a.session_id) == std::tie(b.tick, b.node, b.session_id) &&
              a.pass_index.value_or(0) < b.pass_index.value_or(0));
    });
    RunResult result;
    result.trace.events = std::move(events_);
    result.trace.seed = setup_.seed;
    result.trace.run_index = setup_.run_index;
    result.trace.config = setup_.config;
    result.rounds = std::move(outcomes_);
    result.shared_R = shared_R_;
    return result;
  }

 private:
  static crypto::SharedSecret identity_of(const PartySetup& p, std::uint64_t stream) {
    if (p.identity) return *p.identity;
    Bytes b(crypto::SharedSecret::kMinSize);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(derive_seed(stream, i));
    return crypto::SharedSecret(std::move(b));
  }

  bool three_pass() const { return setup_.variant != Variant::PiggyBank; }
  bool needs_R() const {
    return setup_.variant == Variant::DDT || setup_.variant == Variant::Implicit;
  }

  void log(Tick tick, const NodeId& node, EventKind kind, std::uint64_t sid,
           std::optional<int> pass, const Envelope* env = nullptr,
           std::optional<AbortReason> reason = std::nullopt) {
    if (events_.size() >= kMaxEvents) fail(Errc::internal, "event budget exhausted");
    TraceEvent ev;
    ev.tick = tick;
    ev.node = node;
    ev.kind = kind;
    ev.session_id = sid;
    ev.pass_index = pass;
    if (env != nullptr) ev.envelope = *env;
    ev.reason = reason;
    events_.push_back(std::move(ev));
    last_tick_ = std::max(last_tick_, tick);
  }

  Tick hold(const PartySetup& p) const {
    Tick h = p.processing;
    if (round_ < p.holds.size()) h += p.holds[round_];
    return h;
  }

  void emit(const NodeId& from, Envelope env, Tick at, bool forged = false) {
    QueueItem item;
    item.tick = at;
    item.node = from;
    item.session_id = env.session_id;
    item.pass_index = env.pass_index;
    item.kind = ItemKind::emit;
    item.to = env.receiver;
    item.env = std::move(env);
    item.forged = forged;
    queue_.push(std::move(item));
  }

  void arm_timer(const SessionState& st, Tick from) {
    QueueItem item;
    item.tick = from + setup_.timeout_ticks;
    item.node = st.self;
    item.session_id = st.session_id;
    item.kind = ItemKind::timer;
    item.timer_phase = st.phase;
    queue_.push(std::move(item));
  }

  SessionState& state_of(const NodeId& node) { return node == alice_.self ? alice_ : bob_; }
  const PartySetup& setup_of(const NodeId& node) const {
    return node == setup_.initiator.id ? setup_.initiator : setup_.responder;
  }

  void log_abort(const SessionState& st, Tick tick, std::optional<int> pass) {
    log(tick, st.self, EventKind::abort, st.session_id, pass, nullptr, st.abort_reason);
  }

  Tick run_round(std::size_t r, Tick origin) {
    round_ = r;
    const std::uint64_t sid = r + 1;
    last_tick_ = origin;
    forged_open_ = false;
    box_ = protocol::PiggyBox{};
    authenticated_.reset();

    alice_ = protocol::make_session(Role::initiator, setup_.variant, setup_.initiator.id,
                                    setup_.responder.id, sid, setup_.initiator.key);
    bob_ = protocol::make_session(Role::responder, setup_.variant, setup_.responder.id,
                                  setup_.initiator.id, sid, setup_.responder.key);
    alice_.sign_pass3 = bob_.sign_pass3 = setup_.sign_pass3;
    alice_.identity = *authority_.identity_on_file(alice_.self);
    bob_.identity = *authority_.identity_on_file(bob_.self);

    if (needs_R()) {
      if (!shared_R_) {
        shared_R_ = authority_.handshake(setup_.authority_seed, alice_, bob_, setup_.r_size);
        log(origin, alice_.self, EventKind::handshake, sid, std::nullopt);
        log(origin, bob_.self, EventKind::handshake, sid, std::nullopt);
        chain_initiator_ = shared_R_->bytes();
        chain_responder_ = shared_R_->bytes();
      } else {
        alice_.shared_R = bob_.shared_R = *shared_R_;
      }
    }

    const Bytes& secret = setup_.secrets[r];
    if (three_pass()) {
      Bytes message = secret;
      if (setup_.variant == Variant::Implicit) {
        message = protocol::chain_encode(secret, chain_initiator_);
        chain_initiator_ = secret;
      }
      message = crypto::pack_message(alice_.own_key, message);
      Envelope first = setup_.variant == Variant::DDT ? protocol::ddt_pass1(alice_, message, origin)
                                                      : protocol::dl_pass1(alice_, message, origin);
      log(origin, alice_.self, EventKind::lock, sid, 1);
      emit(alice_.self, std::move(first), origin);
      arm_timer(alice_, origin);
      arm_timer(bob_, origin);
    } else {
      protocol::PiggyBox box = protocol::pb_issue_box(bob_);
      Envelope first;
      first.session_id = sid;
      first.variant = Variant::PiggyBank;
      first.pass_index = 1;
      first.payload = protocol::encode_lock_half(box.box_key);
      first.sender = bob_.self;
      first.receiver = alice_.self;
      emit(bob_.self, std::move(first), origin);
      arm_timer(bob_, origin);
      arm_timer(alice_, origin);
    }

    while (!queue_.empty()) {
      QueueItem item = queue_.pop();
      switch (item.kind) {
        case ItemKind::emit: on_emit(item); break;
        case ItemKind::deliver: on_deliver(item); break;
        case ItemKind::timer: on_timer(item); break;
      }
    }

    finish_round(r, origin);
    return last_tick_;
  }

  void on_emit(QueueItem& item) {
    item.env.sent_tick = item.tick;
    log(item.tick, item.node, EventKind::send, item.session_id, item.pass_index, &item.env);
    schedule(queue_, setup_.topology, eve_.has_value(), item.env, item.node, item.to, item.tick,
             item.forged);
  }

  void on_timer(const QueueItem& item) {
    SessionState& st = state_of(item.node);
    if (st.session_id != item.session_id || st.terminal() || st.phase != item.timer_phase) return;
    st.phase = Phase::aborted;
    st.abort_reason = AbortReason::timeout;
    log_abort(st, item.tick, std::nullopt);
  }

  void on_deliver(QueueItem& item) {
    item.env.received_tick = item.tick;
    log(item.tick, item.node, EventKind::recv, item.session_id, item.pass_index, &item.env);
    if (item.node == kEve) {
      deliver_to_eve(item);
      return;
    }
    SessionState& st = state_of(item.node);
    if (st.session_id != item.session_id || st.terminal()) return;
    try {
      if (three_pass()) {
        three_pass_step(st, item);
      } else {
        piggy_bank_step(st, item);
      }
    } catch (const Error& e) {
      // Out-of-order or duplicate passes are dropped; the session goes on.
      if (e.code() != Errc::protocol_order) throw;
    }
  }

  void deliver_to_eve(const QueueItem& item) {
    std::vector<adversary::Outgoing> out;
    try {
      out = adversary::eve_step(*eve_, item.env, item.tick);
    } catch (const Error& e) {
      if (e.code() != Errc::protocol_order && e.code() != Errc::invalid_payload) throw;
    }
    for (const adversary::Action& a : eve_->actions) {
      EventKind kind = a.kind == adversary::ActionKind::lock     ? EventKind::lock
                       : a.kind == adversary::ActionKind::unlock ? EventKind::unlock
                                                                 : EventKind::open;
      log(a.tick, kEve, kind, a.session_id, a.pass_index);
    }
    eve_->actions.clear();
    for (adversary::Outgoing& o : out) {
      QueueItem e;
      e.tick = std::max(o.send_tick, item.tick);
      e.node = kEve;
      e.session_id = o.env.session_id;
      e.pass_index = o.env.pass_index;
      e.kind = ItemKind::emit;
      e.to = o.destination;
      e.forged = o.forged;
      e.env = std::move(o.env);
      queue_.push(std::move(e));
    }
  }

  void log_verification(const SessionState& st, Tick tick, int verified_pass, bool ok) {
    log(tick, st.self, ok ? EventKind::verify_ok : EventKind::verify_fail, st.session_id,
        verified_pass);
  }

  bool signature_failed(const SessionState& st) const {
    return st.phase == Phase::aborted && st.abort_reason == AbortReason::signature_mismatch;
  }

  void three_pass_step(SessionState& st, const QueueItem& item) {
    const Envelope& env = item.env;
    const Tick now = item.tick;
    const bool ddt = setup_.variant == Variant::DDT;

    if (st.role == Role::responder && env.pass_index == 1) {
      auto out = ddt ? protocol::ddt_pass2(st, env, now) : protocol::dl_pass2(st, env, now);
      if (ddt) log_verification(st, now, 1, !signature_failed(st));
      if (!out) {
        log_abort(st, now, 1);
        return;
      }
      log(now, st.self, EventKind::lock, st.session_id, 2);
      Tick at = now + hold(setup_of(st.self));
      emit(st.self, std::move(*out), at);
      arm_timer(st, at);
      return;
    }

    if (st.role == Role::initiator && env.pass_index == 2) {
      auto out = ddt ? protocol::ddt_pass3(st, env, now) : protocol::dl_pass3(st, env, now);
      if (ddt) log_verification(st, now, 2, !signature_failed(st));
      if (!out) {
        log_abort(st, now, 2);
        return;
      }
      log(now, st.self, EventKind::unlock, st.session_id, 3);
      emit(st.self, std::move(*out), now + hold(setup_of(st.self)));
      return;
    }

    if (st.role == Role::responder && env.pass_index == 3) {
      auto opened = ddt ? protocol::ddt_open(st, env, now) : protocol::dl_open(st, env, now);
      if (ddt && st.sign_pass3) log_verification(st, now, 3, !signature_failed(st));
      if (!opened) {
        log_abort(st, now, 3);
        return;
      }
      if (item.forged) forged_open_ = true;
      log(now, st.self, EventKind::open, st.session_id, 3);
      return;
    }
    fail(Errc::protocol_order, "unexpected pass for this party");
  }

  void piggy_bank_step(SessionState& st, const QueueItem& item) {
    const Envelope& env = item.env;
    const Tick now = item.tick;

    if (st.role == Role::initiator && env.pass_index == 1) {
      protocol::PiggyBox box;
      try {
        box.box_key = protocol::decode_lock_half(env.payload);
      } catch (const Error& e) {
        if (e.code() != Errc::decode_failure) throw;
        st.phase = Phase::aborted;
        st.abort_reason = AbortReason::decode_failure;
        log_abort(st, now, 1);
        return;
      }
      const crypto::Digest id = crypto::digest(setup_.secrets[round_]);
      Bytes manifest(id.bytes.begin(), id.bytes.end());
      box = protocol::pb_deposit(st, std::move(box), setup_.secrets[round_], manifest,
                                 derive_seed(setup_.letter_seed, round_));
      log(now, st.self, EventKind::lock, st.session_id, 2);

      Envelope sealed;
      sealed.session_id = st.session_id;
      sealed.variant = Variant::PiggyBank;
      sealed.pass_index = 2;
      sealed.payload = *box.sealed_contents;
      sealed.sender = st.self;
      sealed.receiver = st.peer;
      Envelope letter = sealed;
      letter.pass_index = 3;
      letter.payload = protocol::encode_letter(box);
      Tick at = now + hold(setup_of(st.self));
      emit(st.self, std::move(sealed), at);
      emit(st.self, std::move(letter), at);
      return;
    }

    if (st.role == Role::responder && (env.pass_index == 2 || env.pass_index == 3)) {
      if (env.pass_index == 2) {
        box_.sealed_contents = env.payload;
      } else {
        try {
          protocol::decode_letter(env.payload, box_);
        } catch (const Error& e) {
          if (e.code() != Errc::decode_failure) throw;
          return;
        }
      }
      if (item.forged) forged_open_ = true;
      if (!box_.sealed_contents || !box_.letter_ciphertext) return;
      try {
        protocol::PiggyOpening opening = protocol::pb_open(st, box_, authority_);
        authenticated_ = opening.authenticated;
        log(now, st.self, EventKind::unlock, st.session_id, 2);
        log_verification(st, now, 3, opening.authenticated);
        if (opening.authenticated) {
          log(now, st.self, EventKind::open, st.session_id, 3);
        } else {
          log_abort(st, now, 3);
        }
      } catch (const Error& e) {
        if (e.code() != Errc::decode_failure) throw;
        authenticated_ = false;
        log_abort(st, now, 3);
      }
      return;
    }
    fail(Errc::protocol_order, "unexpected pass for this party");
  }

  void finish_round(std::size_t r, Tick origin) {
    RoundOutcome o;
    o.session_id = r + 1;
    o.origin = origin;
    o.end = last_tick_;
    o.sent = setup_.secrets[r];
    o.initiator_phase = alice_.phase;
    o.responder_phase = bob_.phase;
    o.initiator_abort = alice_.abort_reason;
    o.responder_abort = bob_.abort_reason;
    o.responder_opened_forged = forged_open_;
    o.authenticated = authenticated_;

    if (bob_.recovered_S) {
      if (three_pass()) {
        Bytes plain;
        try {
          plain = crypto::unpack_message(bob_.own_key, *bob_.recovered_S);
        } catch (const Error&) {
          plain = *bob_.recovered_S;
        }
        if (setup_.variant == Variant::Implicit) {
          plain = protocol::chain_decode(plain, chain_responder_);
          chain_responder_ = plain;
        }
        o.recovered = std::move(plain);
      } else {
        o.recovered = *bob_.recovered_S;
      }
    }
    if (eve_ && eve_->recovered && eve_->current_session == o.session_id) {
      o.adversary_recovered = *eve_->recovered;
    }
    outcomes_.push_back(std::move(o));
  }

  const RunSetup& setup_;
  std::optional<EveState> eve_;
  protocol::Authority authority_;
  std::optional<crypto::SharedSecret> shared_R_;
  EventQueue queue_;
  std::vector<TraceEvent> events_;
  std::vector<RoundOutcome> outcomes_;

  std::size_t round_ = 0;
  Tick last_tick_ = 0;
  SessionState alice_;
  SessionState bob_;
  Bytes chain_initiator_;
  Bytes chain_responder_;
  protocol::PiggyBox box_;
  std::optional<bool> authenticated_;
  bool forged_open_ = false;
};

}  // namespace

RunResult run(const RunSetup& setup) {
  if (setup.secrets.empty()) fail(Errc::invalid_parameter, "run needs at least one round");
  return Simulation(setup).run();
}

}  // namespace ddtlab::netsim
