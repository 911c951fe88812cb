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

#include "ddtlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace ddtlab::harness {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;
using protocol::Variant;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(Errc::config, path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
  return j;
}

void check_keys(const Json& j, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(join(path, key), "unknown key");
    }
  }
}

const Json* find(const Json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

std::string get_string(const Json& j, const std::string& key, const std::string& path,
                       std::optional<std::string> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    config_error(join(path, key), "required key is missing");
  }
  if (!v->is_string()) config_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

std::int64_t get_int(const Json& j, const std::string& key, const std::string& path,
                     std::optional<std::int64_t> fallback, std::int64_t min_value) {
  const Json* v = find(j, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    config_error(join(path, key), "required key is missing");
  }
  if (!v->is_number_integer()) config_error(join(path, key), "expected an integer");
  if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    config_error(join(path, key), "integer out of range");
  }
  std::int64_t x = v->get<std::int64_t>();
  if (x < min_value) {
    config_error(join(path, key), "must be >= " + std::to_string(min_value));
  }
  return x;
}

std::uint64_t get_u64(const Json& j, const std::string& key, const std::string& path,
                      std::uint64_t fallback) {
  const Json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
    config_error(join(path, key), "expected a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

bool get_bool(const Json& j, const std::string& key, const std::string& path, bool fallback) {
  const Json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) config_error(join(path, key), "expected a boolean");
  return v->get<bool>();
}

double get_double(const Json& j, const std::string& key, const std::string& path,
                  double fallback) {
  const Json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) config_error(join(path, key), "expected a number");
  double x = v->get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) config_error(join(path, key), "must be positive");
  return x;
}

std::pair<NodeId, NodeId> parse_link(const std::string& text, const std::string& path) {
  auto dash = text.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == text.size() ||
      text.find('-', dash + 1) != std::string::npos) {
    config_error(path, "link must be written as '<node>-<node>'");
  }
  return {text.substr(0, dash), text.substr(dash + 1)};
}

std::string link_name(const NodeId& a, const NodeId& b) {
  return a < b ? a + "-" + b : b + "-" + a;
}

SequenceSpec parse_sequence(const Json& j, const std::string& path) {
  require_object(j, path);
  SequenceSpec spec;
  std::string kind = get_string(j, "kind", path);
  if (kind == "m-sequence") {
    check_keys(j, path, {"kind", "degree", "taps", "seed"});
    spec.kind = detect::SequenceKind::m_sequence;
    spec.degree = static_cast<int>(get_int(j, "degree", path, std::nullopt, 2));
    spec.taps = static_cast<std::uint32_t>(get_int(j, "taps", path, std::nullopt, 1));
    spec.seed = static_cast<std::uint32_t>(get_int(j, "seed", path, std::nullopt, 0));
  } else if (kind == "walsh") {
    check_keys(j, path, {"kind", "row", "length"});
    spec.kind = detect::SequenceKind::walsh;
    spec.row = static_cast<int>(get_int(j, "row", path, std::nullopt, 0));
    spec.length = static_cast<int>(get_int(j, "length", path, std::nullopt, 1));
  } else {
    config_error(join(path, "kind"), "expected 'm-sequence' or 'walsh'");
  }
  try {
    spec.generate();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return spec;
}

OJson sequence_json(const SequenceSpec& s) {
  OJson j;
  if (s.kind == detect::SequenceKind::m_sequence) {
    j["kind"] = "m-sequence";
    j["degree"] = s.degree;
    j["taps"] = s.taps;
    j["seed"] = s.seed;
  } else {
    j["kind"] = "walsh";
    j["row"] = s.row;
    j["length"] = s.length;
  }
  return j;
}

}  // namespace

detect::DelaySequence SequenceSpec::generate() const {
  if (kind == detect::SequenceKind::m_sequence) return detect::gen_mseq(degree, taps, seed);
  return detect::gen_walsh(row, length);
}

Scenario parse_scenario(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(Errc::config, std::string("<document>: malformed JSON: ") + e.what());
  }
  require_object(root, "<document>");
  check_keys(root, "", {"name", "description", "variant", "seed", "rounds", "secret_len",
                        "sign_pass3", "timeout_ticks", "topology", "processing", "crypto",
                        "adversary", "delays", "thresholds"});

  Scenario s;
  s.name = get_string(root, "name", "");
  if (s.name.empty()) config_error("name", "must not be empty");
  s.description = get_string(root, "description", "", std::string{});
  try {
    s.variant = protocol::variant_from_string(get_string(root, "variant", ""));
  } catch (const Error& e) {
    config_error("variant", e.what());
  }
  s.seed = get_u64(root, "seed", "", 0);
  s.rounds = static_cast<int>(get_int(root, "rounds", "", 1, 1));
  s.secret_len = static_cast<std::size_t>(get_int(root, "secret_len", "", 16, 1));
  if (s.secret_len > 4096) config_error("secret_len", "must be <= 4096");
  if (s.variant == Variant::Implicit && s.secret_len < crypto::SharedSecret::kMinSize) {
    config_error("secret_len", "implicit chaining needs secrets of at least 16 bytes");
  }
  s.sign_pass3 = get_bool(root, "sign_pass3", "", true);

  // topology
  const Json* topo = find(root, "topology");
  if (topo == nullptr) config_error("topology", "required key is missing");
  require_object(*topo, "topology");
  check_keys(*topo, "topology", {"nodes", "latency", "eve_cut"});
  const Json* nodes = find(*topo, "nodes");
  if (nodes == nullptr || !nodes->is_array()) config_error("topology.nodes", "expected an array");
  for (const Json& n : *nodes) {
    if (!n.is_string()) config_error("topology.nodes", "node ids must be strings");
    std::string id = n.get<std::string>();
    if (id != kInitiator && id != kResponder && id != netsim::kEve) {
      config_error("topology.nodes", "unknown node '" + id + "' (expected alice, bob, eve)");
    }
    if (s.topology.has_node(id)) config_error("topology.nodes", "duplicate node '" + id + "'");
    s.topology.add_node(id);
  }
  if (!s.topology.has_node(kInitiator) || !s.topology.has_node(kResponder)) {
    config_error("topology.nodes", "alice and bob are required");
  }
  const Json* lat = find(*topo, "latency");
  if (lat == nullptr) config_error("topology.latency", "required key is missing");
  require_object(*lat, "topology.latency");
  for (const auto& [name, value] : lat->items()) {
    const std::string path = "topology.latency." + name;
    auto [a, b] = parse_link(name, path);
    if (!s.topology.has_node(a) || !s.topology.has_node(b) || a == b) {
      config_error(path, "link must join two distinct declared nodes");
    }
    if (!value.is_number_integer() || value.get<std::int64_t>() <= 0) {
      config_error(path, "latency must be a positive integer");
    }
    if (s.topology.has_link(a, b)) config_error(path, "link declared twice");
    s.topology.set_latency(a, b, value.get<std::int64_t>());
  }
  if (!s.topology.has_link(kInitiator, kResponder)) {
    config_error("topology.latency", "the alice-bob link is required");
  }
  if (const Json* cut = find(*topo, "eve_cut")) {
    if (!cut->is_array()) config_error("topology.eve_cut", "expected an array");
    for (const Json& c : *cut) {
      if (!c.is_string()) config_error("topology.eve_cut", "links must be strings");
      auto [a, b] = parse_link(c.get<std::string>(), "topology.eve_cut");
      if (!s.topology.has_link(a, b)) {
        config_error("topology.eve_cut", "link " + c.get<std::string>() + " is not declared");
      }
      if (a == netsim::kEve || b == netsim::kEve) {
        config_error("topology.eve_cut", "links to eve cannot be on the cut");
      }
      s.topology.add_cut(a, b);
    }
  }
  const Tick round_trip = 2 * s.topology.latency(kInitiator, kResponder);
  s.timeout_ticks = get_int(root, "timeout_ticks", "", 10 * round_trip, 1);

  // processing
  s.processing = {{kInitiator, 0}, {kResponder, 0}};
  if (const Json* proc = find(root, "processing")) {
    require_object(*proc, "processing");
    check_keys(*proc, "processing", {"alice", "bob"});
    for (const NodeId& id : {kInitiator, kResponder}) {
      s.processing[id] = get_int(*proc, id, "processing", 0, 0);
    }
  }

  // crypto
  const Json* cr = find(root, "crypto");
  if (cr == nullptr) config_error("crypto", "required key is missing");
  require_object(*cr, "crypto");
  check_keys(*cr, "crypto", {"backend", "p"});
  try {
    s.backend = crypto::backend_from_string(get_string(*cr, "backend", "crypto"));
  } catch (const Error& e) {
    config_error("crypto.backend", e.what());
  }
  if (s.backend == crypto::Backend::exp_mod_p) {
    s.prime = get_u64(*cr, "p", "crypto", kDefaultPrime);
    if (s.prime < 5 || !crypto::is_prime(s.prime)) config_error("crypto.p", "must be a prime >= 5");
    if (crypto::block_capacity(s.prime) == 0) {
      config_error("crypto.p", "prime too small to carry byte payloads (need p >= 512)");
    }
  } else {
    if (find(*cr, "p") != nullptr) config_error("crypto.p", "only valid for exp-mod-p");
    s.prime = 0;
  }

  // adversary
  if (const Json* adv = find(root, "adversary"); adv != nullptr && !adv->is_null()) {
    require_object(*adv, "adversary");
    check_keys(*adv, "adversary", {"strategy", "fake_gift", "processing_delay", "mimic_delays"});
    AdversarySpec a;
    try {
      a.strategy = adversary::strategy_from_string(get_string(*adv, "strategy", "adversary"));
    } catch (const Error& e) {
      config_error("adversary.strategy", e.what());
    }
    if (const Json* fg = find(*adv, "fake_gift")) {
      if (!fg->is_string()) config_error("adversary.fake_gift", "expected a hex string");
      try {
        a.fake_gift = from_hex(fg->get<std::string>());
      } catch (const Error& e) {
        config_error("adversary.fake_gift", e.what());
      }
    }
    if (a.strategy == adversary::Strategy::FakeGift && a.fake_gift.empty()) {
      config_error("adversary.fake_gift", "FakeGift needs a non-empty fake gift");
    }
    a.processing_delay = get_int(*adv, "processing_delay", "adversary", 0, 0);
    a.mimic_delays = get_bool(*adv, "mimic_delays", "adversary", false);
    if (s.variant == Variant::PiggyBank && (a.strategy == adversary::Strategy::DelayedRelay ||
                                            a.strategy == adversary::Strategy::Replay)) {
      config_error("adversary.strategy", "not supported for the PiggyBank variant");
    }
    if (!s.topology.has_node(netsim::kEve)) config_error("topology.nodes", "adversary needs node eve");
    if (!s.topology.has_link(kInitiator, netsim::kEve) ||
        !s.topology.has_link(netsim::kEve, kResponder)) {
      config_error("topology.latency", "adversary needs alice-eve and bob-eve links");
    }
    if (s.topology.cut().empty()) config_error("topology.eve_cut", "adversary controls no link");
    s.adversary = std::move(a);
  }

  // delays
  if (const Json* d = find(root, "delays"); d != nullptr && !d->is_null()) {
    require_object(*d, "delays");
    check_keys(*d, "delays", {"delta", "initiator", "responder"});
    if (s.variant == Variant::PiggyBank) config_error("delays", "not supported for PiggyBank");
    DelaySpec spec;
    spec.delta = get_int(*d, "delta", "delays", 2, 1);
    for (const char* side : {"initiator", "responder"}) {
      const Json* seq = find(*d, side);
      if (seq == nullptr || seq->is_null()) continue;
      std::string path = std::string("delays.") + side;
      SequenceSpec parsed = parse_sequence(*seq, path);
      if (parsed.generate().size() != static_cast<std::size_t>(s.rounds)) {
        config_error(path, "sequence length " + std::to_string(parsed.generate().size()) +
                               " differs from rounds " + std::to_string(s.rounds));
      }
      (std::string_view(side) == "initiator" ? spec.initiator : spec.responder) = parsed;
    }
    if (!spec.initiator && !spec.responder) config_error("delays", "no delay sequence configured");
    s.delays = std::move(spec);
  }

  if (const Json* th = find(root, "thresholds")) {
    require_object(*th, "thresholds");
    check_keys(*th, "thresholds", {"shrink", "ratio", "double", "correlation"});
    s.thresholds.shrink = get_double(*th, "shrink", "thresholds", s.thresholds.shrink);
    s.thresholds.ratio = get_double(*th, "ratio", "thresholds", s.thresholds.ratio);
    s.thresholds.doubling = get_double(*th, "double", "thresholds", s.thresholds.doubling);
    s.thresholds.correlation =
        get_double(*th, "correlation", "thresholds", s.thresholds.correlation);
  }
  return s;
}

std::string canonical_json(const Scenario& s) {
  OJson j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["variant"] = protocol::to_string(s.variant);
  j["seed"] = s.seed;
  j["rounds"] = s.rounds;
  j["secret_len"] = s.secret_len;
  j["sign_pass3"] = s.sign_pass3;
  j["timeout_ticks"] = s.timeout_ticks;

  OJson topo;
  topo["nodes"] = s.topology.nodes();
  OJson lat = OJson::object();
  for (const auto& [link, ticks] : s.topology.links()) lat[link_name(link.first, link.second)] = ticks;
  topo["latency"] = lat;
  OJson cut = OJson::array();
  for (const auto& link : s.topology.cut()) cut.push_back(link_name(link.first, link.second));
  topo["eve_cut"] = cut;
  j["topology"] = topo;

  OJson proc;
  for (const NodeId& id : {kInitiator, kResponder}) proc[id] = s.processing.at(id);
  j["processing"] = proc;

  OJson cr;
  cr["backend"] = crypto::to_string(s.backend);
  if (s.backend == crypto::Backend::exp_mod_p) cr["p"] = s.prime;
  j["crypto"] = cr;

  if (s.adversary) {
    OJson a;
    a["strategy"] = adversary::to_string(s.adversary->strategy);
    a["fake_gift"] = to_hex(s.adversary->fake_gift);
    a["processing_delay"] = s.adversary->processing_delay;
    a["mimic_delays"] = s.adversary->mimic_delays;
    j["adversary"] = a;
  } else {
    j["adversary"] = nullptr;
  }

  if (s.delays) {
    OJson d;
    d["delta"] = s.delays->delta;
    d["initiator"] = s.delays->initiator ? sequence_json(*s.delays->initiator) : OJson(nullptr);
    d["responder"] = s.delays->responder ? sequence_json(*s.delays->responder) : OJson(nullptr);
    j["delays"] = d;
  } else {
    j["delays"] = nullptr;
  }

  OJson th;
  th["shrink"] = s.thresholds.shrink;
  th["ratio"] = s.thresholds.ratio;
  th["double"] = s.thresholds.doubling;
  th["correlation"] = s.thresholds.correlation;
  j["thresholds"] = th;
  return j.dump(2) + "\n";
}

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t word = rng();
    for (std::size_t k = 0; k < 8 && i + k < n; ++k) out[i + k] = static_cast<std::uint8_t>(word >> (8 * k));
  }
  return out;
}

crypto::SharedSecret secret_from(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return crypto::SharedSecret(random_bytes(rng, crypto::SharedSecret::kMinSize));
}

crypto::LockKey make_key(const Scenario& s, std::uint64_t seed) {
  if (s.backend == crypto::Backend::exp_mod_p) return crypto::keygen_exp(s.prime, seed);
  std::size_t fake = s.adversary ? s.adversary->fake_gift.size() : 0;
  // Room for the piggy-bank layout: length prefix plus a 32-byte letter key.
  return crypto::keygen_xor(seed, std::max(s.secret_len, fake) + 34);
}

std::vector<Tick> holds_for(const std::optional<SequenceSpec>& spec, Tick delta) {
  std::vector<Tick> holds;
  if (!spec) return holds;
  for (int v : spec->generate().values) holds.push_back(delta * (v + 1) / 2);
  return holds;
}

netsim::RunSetup materialize_with(const Scenario& s, std::uint64_t run_index,
                                  const std::string& config) {
  const std::uint64_t run_seed = s.seed + run_index;
  auto stream = [&](SeedStream id) { return derive_seed(run_seed, static_cast<std::uint64_t>(id)); };

  netsim::RunSetup setup;
  setup.variant = s.variant;
  setup.topology = s.topology;
  setup.seed = run_seed;
  setup.run_index = run_index;
  setup.config = config;
  setup.sign_pass3 = s.sign_pass3;
  setup.timeout_ticks = s.timeout_ticks;
  setup.authority_seed = stream(SeedStream::authority);
  setup.letter_seed = stream(SeedStream::letter);
  setup.r_size = s.variant == Variant::Implicit
                     ? std::max(s.secret_len, crypto::SharedSecret::kMinSize)
                     : protocol::Authority::kRSize;

  setup.initiator.id = kInitiator;
  setup.initiator.key = make_key(s, stream(SeedStream::initiator_key));
  setup.initiator.processing = s.processing.at(kInitiator);
  setup.initiator.identity = secret_from(stream(SeedStream::initiator_identity));
  setup.responder.id = kResponder;
  setup.responder.key = make_key(s, stream(SeedStream::responder_key));
  setup.responder.processing = s.processing.at(kResponder);
  setup.responder.identity = secret_from(stream(SeedStream::responder_identity));
  if (s.delays) {
    setup.initiator.holds = holds_for(s.delays->initiator, s.delays->delta);
    setup.responder.holds = holds_for(s.delays->responder, s.delays->delta);
  }

  std::mt19937_64 rng(stream(SeedStream::secrets));
  for (int r = 0; r < s.rounds; ++r) setup.secrets.push_back(random_bytes(rng, s.secret_len));

  if (s.adversary) {
    adversary::EveState eve;
    eve.strategy = s.adversary->strategy;
    eve.own_key = make_key(s, stream(SeedStream::adversary_key));
    eve.fake_gift = s.adversary->fake_gift;
    eve.processing_delay = s.adversary->processing_delay;
    eve.mimic_delays = s.adversary->mimic_delays;
    eve.guessed_R = secret_from(stream(SeedStream::adversary_guess));
    eve.latency_to[kInitiator] = s.topology.latency(netsim::kEve, kInitiator);
    eve.latency_to[kResponder] = s.topology.latency(netsim::kEve, kResponder);
    for (const auto& link : s.topology.cut()) eve.cut.insert(link);
    setup.eve = std::move(eve);
  }
  return setup;
}

}  // namespace

netsim::RunSetup materialize(const Scenario& s, std::uint64_t run_index) {
  return materialize_with(s, run_index, canonical_json(s));
}

netsim::Trace run(const Scenario& s, std::uint64_t run_index) {
  return netsim::run(materialize(s, run_index)).trace;
}

std::optional<Baseline> calibrate(const Scenario& s) {
  if (s.variant == Variant::PiggyBank) return std::nullopt;
  Scenario honest = s;
  honest.adversary.reset();
  honest.delays.reset();
  honest.rounds = 1;
  netsim::Trace trace = run(honest, 0);
  auto a = detect::exchange_times(trace, kInitiator, 1);
  auto b = detect::exchange_times(trace, kResponder, 1);
  return Baseline{a.interval, b.interval,
                  std::max(a.exchange_ticks.back(), b.exchange_ticks.back())};
}

std::uint64_t RunSummary::abort_count() const {
  std::uint64_t n = 0;
  for (const auto& [reason, count] : aborts) n += count;
  return n;
}

double RunSummary::detection_rate(const std::string& rule) const {
  return rate([&](const RunRecord& r) {
    auto flagged = [&](const detect::Verdict& v) {
      if (rule == "overall") return v.overall;
      auto it = v.rules.find(rule);
      return it != v.rules.end() && it->second.flag;
    };
    if (r.timing_verdict && flagged(*r.timing_verdict)) return true;
    for (const DelayRecord& d : r.delays) {
      if (flagged(d.verdict)) return true;
    }
    return false;
  });
}

namespace {

RunRecord make_record(const Scenario& s, const std::optional<Baseline>& baseline,
                      const netsim::RunResult& result) {
  RunRecord rec;
  rec.run = result.trace.run_index;
  rec.seed = result.trace.seed;
  rec.completed = true;
  rec.recovered_equals_sent = true;
  rec.adversary_recovered_secret = s.adversary.has_value();
  bool all_authenticated = true;
  for (const netsim::RoundOutcome& o : result.rounds) {
    if (o.initiator_phase != protocol::Phase::done || o.responder_phase != protocol::Phase::done) {
      rec.completed = false;
    }
    if (!o.recovered || *o.recovered != o.sent) rec.recovered_equals_sent = false;
    if (s.adversary && !s.adversary->fake_gift.empty() && o.recovered &&
        *o.recovered == s.adversary->fake_gift) {
      rec.responder_received_fake = true;
    }
    if (!o.adversary_recovered || *o.adversary_recovered != o.sent) {
      rec.adversary_recovered_secret = false;
    }
    if (!o.recovered || !protocol::compare_digests(crypto::digest(o.sent), *o.recovered)) {
      rec.content_mismatch = true;
    }
    if (o.responder_opened_forged) rec.responder_opened_forged = true;
    if (o.authenticated != true) all_authenticated = false;
  }
  if (s.variant == Variant::PiggyBank) rec.authenticated = all_authenticated;

  for (const netsim::TraceEvent& ev : result.trace.events) {
    if (ev.kind == netsim::EventKind::abort && ev.node != netsim::kEve) {
      rec.abort_reason = ev.reason;
      rec.abort_party = ev.node;
      break;
    }
  }
  if (!rec.completed && !rec.abort_reason) {
    // Should be unreachable: every unfinished session times out.
    fail(Errc::internal, "run ended with an unfinished session and no abort");
  }

  if (baseline) {
    try {
      PartyTiming t{detect::exchange_times(result.trace, kInitiator, 1),
                    detect::exchange_times(result.trace, kResponder, 1)};
      rec.timing_verdict = detect::timing_verdict(t.initiator, t.responder,
                                                  baseline->initiator_interval, baseline->total,
                                                  s.thresholds);
      rec.timing = std::move(t);
    } catch (const Error& e) {
      if (e.code() != Errc::insufficient_data) throw;
    }
    if (s.delays) {
      auto add = [&](const std::optional<SequenceSpec>& spec, const NodeId& party,
                     const NodeId& observer, Tick observer_baseline) {
        if (!spec) return;
        DelayRecord d;
        d.party = party;
        d.observer = observer;
        detect::DelaySequence seq = spec->generate();
        d.reading = detect::read_delays(result.trace, observer, seq, s.delays->delta,
                                        observer_baseline);
        d.verdict = detect::delay_verdict(result.trace, party, seq, s.delays->delta,
                                          s.thresholds.correlation, observer_baseline);
        rec.delays.push_back(std::move(d));
      };
      add(s.delays->initiator, kInitiator, kResponder, baseline->responder_interval);
      add(s.delays->responder, kResponder, kInitiator, baseline->initiator_interval);
    }
  }
  return rec;
}

}  // namespace

BatchResult run_batch(const Scenario& s, std::uint64_t runs, bool keep_traces) {
  if (runs == 0) fail(Errc::invalid_parameter, "runs must be >= 1");
  const std::string config = canonical_json(s);
  const std::optional<Baseline> baseline = calibrate(s);

  BatchResult out;
  RunSummary& sum = out.summary;
  sum.scenario = s.name;
  sum.config_digest = crypto::digest(bytes_of(config)).hex();
  sum.seed = s.seed;
  sum.runs = runs;
  sum.baseline = baseline;
  sum.thresholds = s.thresholds;
  for (auto reason : {protocol::AbortReason::signature_mismatch,
                      protocol::AbortReason::decode_failure, protocol::AbortReason::timeout}) {
    sum.aborts[std::string(protocol::to_string(reason))] = 0;
  }

  for (std::uint64_t i = 0; i < runs; ++i) {
    netsim::RunResult result = netsim::run(materialize_with(s, i, config));
    RunRecord rec = make_record(s, baseline, result);
    if (rec.completed) {
      ++sum.completions;
    } else {
      ++sum.aborts[std::string(protocol::to_string(*rec.abort_reason))];
    }
    sum.records.push_back(std::move(rec));
    if (keep_traces) out.traces.push_back(std::move(result.trace));
  }
  return out;
}

namespace {

OJson number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

OJson verdict_json(const detect::Verdict& v) {
  OJson j;
  OJson rules = OJson::object();
  for (const auto& [name, rule] : v.rules) {
    OJson r;
    r["flag"] = rule.flag;
    r["evidence"] = number_or_inf(rule.evidence);
    rules[name] = r;
  }
  j["rules"] = rules;
  j["overall"] = v.overall;
  OJson th;
  th["shrink"] = v.thresholds.shrink;
  th["ratio"] = v.thresholds.ratio;
  th["double"] = v.thresholds.doubling;
  th["correlation"] = v.thresholds.correlation;
  j["thresholds"] = th;
  return j;
}

OJson stats_json(const detect::TimingStats& t) {
  OJson j;
  j["party"] = t.party;
  j["exchange_ticks"] = t.exchange_ticks;
  j["interval"] = t.interval;
  j["mean"] = t.mean.value();
  return j;
}

OJson optional_string(const std::optional<std::string>& s) { return s ? OJson(*s) : OJson(nullptr); }

}  // namespace

std::string summary_json(const RunSummary& sum) {
  OJson j;
  j["scenario"] = sum.scenario;
  j["config_digest"] = sum.config_digest;
  j["seed"] = sum.seed;
  j["runs"] = sum.runs;
  j["completions"] = sum.completions;
  OJson aborts = OJson::object();
  for (const auto& [reason, count] : sum.aborts) aborts[reason] = count;
  j["aborts"] = aborts;

  OJson rates;
  rates["recovered_equals_sent"] = sum.rate([](const RunRecord& r) { return r.recovered_equals_sent; });
  rates["responder_received_fake"] = sum.rate([](const RunRecord& r) { return r.responder_received_fake; });
  rates["adversary_recovered_secret"] =
      sum.rate([](const RunRecord& r) { return r.adversary_recovered_secret; });
  rates["content_mismatch"] = sum.rate([](const RunRecord& r) { return r.content_mismatch; });
  rates["responder_opened_forged"] = sum.rate([](const RunRecord& r) { return r.responder_opened_forged; });
  const bool has_letters = std::any_of(sum.records.begin(), sum.records.end(),
                                      [](const RunRecord& r) { return r.authenticated.has_value(); });
  rates["authenticated"] =
      has_letters ? OJson(sum.rate([](const RunRecord& r) { return r.authenticated == true; }))
                  : OJson(nullptr);
  j["rates"] = rates;

  OJson det;
  for (const std::string& rule : {detect::kIntervalShrink, detect::kMeanRatio,
                                  detect::kTotalDoubling, detect::kCorrelationFailure,
                                  std::string("overall")}) {
    det[rule] = sum.detection_rate(rule);
  }
  j["detection_rate"] = det;

  if (sum.baseline) {
    OJson b;
    b["initiator_interval"] = sum.baseline->initiator_interval;
    b["responder_interval"] = sum.baseline->responder_interval;
    b["total"] = sum.baseline->total;
    j["baseline"] = b;
  } else {
    j["baseline"] = nullptr;
  }
  OJson th;
  th["shrink"] = sum.thresholds.shrink;
  th["ratio"] = sum.thresholds.ratio;
  th["double"] = sum.thresholds.doubling;
  th["correlation"] = sum.thresholds.correlation;
  j["thresholds"] = th;

  // Empirical correlation range per delaying party.
  std::map<NodeId, std::vector<double>> corr;
  for (const RunRecord& r : sum.records) {
    for (const DelayRecord& d : r.delays) corr[d.party].push_back(d.reading.correlation);
  }
  OJson cj = OJson::object();
  for (const auto& [party, values] : corr) {
    double lo = values.front(), hi = values.front(), total = 0.0;
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      total += v;
    }
    OJson e;
    e["min"] = lo;
    e["max"] = hi;
    e["mean"] = total / static_cast<double>(values.size());
    cj[party] = e;
  }
  j["correlation"] = cj;

  OJson per_run = OJson::array();
  for (const RunRecord& r : sum.records) {
    OJson pr;
    pr["run"] = r.run;
    pr["seed"] = r.seed;
    pr["outcome"] = r.completed ? "completed" : "aborted";
    pr["abort_reason"] = r.abort_reason
                             ? OJson(std::string(protocol::to_string(*r.abort_reason)))
                             : OJson(nullptr);
    pr["abort_party"] = optional_string(r.abort_party);
    pr["recovered_equals_sent"] = r.recovered_equals_sent;
    pr["responder_received_fake"] = r.responder_received_fake;
    pr["adversary_recovered_secret"] = r.adversary_recovered_secret;
    pr["content_mismatch"] = r.content_mismatch;
    pr["responder_opened_forged"] = r.responder_opened_forged;
    pr["authenticated"] = r.authenticated ? OJson(*r.authenticated) : OJson(nullptr);
    if (r.timing) {
      OJson t;
      t["initiator"] = stats_json(r.timing->initiator);
      t["responder"] = stats_json(r.timing->responder);
      pr["timing"] = t;
    } else {
      pr["timing"] = nullptr;
    }
    OJson verdicts;
    verdicts["timing"] = r.timing_verdict ? verdict_json(*r.timing_verdict) : OJson(nullptr);
    OJson delays = OJson::object();
    for (const DelayRecord& d : r.delays) {
      OJson dj;
      dj["observer"] = d.observer;
      dj["verdict"] = verdict_json(d.verdict);
      dj["residuals"] = d.reading.residuals;
      dj["estimates"] = d.reading.estimates;
      dj["correlation"] = d.reading.correlation;
      dj["lag_profile"] = d.reading.lag_profile;
      delays[d.party] = dj;
    }
    verdicts["delay"] = delays;
    pr["verdicts"] = verdicts;
    per_run.push_back(pr);
  }
  j["per_run"] = per_run;
  return j.dump(2) + "\n";
}

std::string summary_text(const RunSummary& sum) {
  std::ostringstream os;
  auto pct = [](double x) {
    std::ostringstream p;
    p.precision(4);
    p << x * 100.0 << "%";
    return p.str();
  };
  os << "scenario     " << sum.scenario << "\n";
  os << "runs         " << sum.runs << " (seed " << sum.seed << ")\n";
  os << "completions  " << sum.completions << "\n";
  os << "aborts       " << sum.abort_count();
  for (const auto& [reason, count] : sum.aborts) {
    if (count != 0) os << "  " << reason << "=" << count;
  }
  os << "\n";
  os << "recovered==sent         "
     << pct(sum.rate([](const RunRecord& r) { return r.recovered_equals_sent; })) << "\n";
  os << "responder got fake      "
     << pct(sum.rate([](const RunRecord& r) { return r.responder_received_fake; })) << "\n";
  os << "adversary got secret    "
     << pct(sum.rate([](const RunRecord& r) { return r.adversary_recovered_secret; })) << "\n";
  os << "content check mismatch  "
     << pct(sum.rate([](const RunRecord& r) { return r.content_mismatch; })) << "\n";
  if (sum.baseline) {
    os << "baseline     T_A=" << sum.baseline->initiator_interval
       << " T_B=" << sum.baseline->responder_interval << " total=" << sum.baseline->total << "\n";
  }
  os << "detection   ";
  for (const std::string& rule : {detect::kIntervalShrink, detect::kMeanRatio,
                                  detect::kTotalDoubling, detect::kCorrelationFailure}) {
    os << " " << rule << "=" << pct(sum.detection_rate(rule));
  }
  os << "\n";
  if (!sum.records.empty() && sum.records.front().timing) {
    const PartyTiming& t = *sum.records.front().timing;
    os << "run 0 ticks  alice=(" << t.initiator.exchange_ticks[0] << ","
       << t.initiator.exchange_ticks[1] << ") bob=(" << t.responder.exchange_ticks[0] << ","
       << t.responder.exchange_ticks[1] << ") means " << t.initiator.mean.value() << " / "
       << t.responder.mean.value() << "\n";
  }
  return os.str();
}

std::string traces_jsonl(const std::vector<netsim::Trace>& traces) {
  std::string out;
  for (const netsim::Trace& t : traces) out += netsim::to_jsonl(t);
  return out;
}

void emit(const std::string& content, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io, "cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) fail(Errc::io, "failed writing " + path);
}

const ReferenceScenario* find_reference(std::string_view name) {
  for (const ReferenceScenario& r : reference_scenarios()) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

}  // namespace ddtlab::harness
