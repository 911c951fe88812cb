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

// Scenario files, seeded batch execution and result emission.
//
// Run i of a batch uses seed + i. Inside a run, every random component draws
// from its own stream: derive_seed(run_seed, stream) with the stream ids in
// SeedStream below, so changing one component never shifts another.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddtlab/detect.hpp"

namespace ddtlab::harness {

enum class SeedStream : std::uint64_t {
  initiator_key = 1,
  responder_key = 2,
  adversary_key = 3,
  authority = 4,
  secrets = 5,
  initiator_identity = 6,
  responder_identity = 7,
  letter = 8,
  adversary_guess = 9,
};

inline const NodeId kInitiator = "alice";
inline const NodeId kResponder = "bob";

// Largest prime below 2^64.
inline constexpr std::uint64_t kDefaultPrime = 18446744073709551557ULL;

struct SequenceSpec {
  detect::SequenceKind kind = detect::SequenceKind::m_sequence;
  int degree = 3;
  std::uint32_t taps = 0xB;
  std::uint32_t seed = 1;
  int row = 0;
  int length = 0;  // walsh only

  detect::DelaySequence generate() const;
  bool operator==(const SequenceSpec&) const = default;
};

struct DelaySpec {
  Tick delta = 2;
  std::optional<SequenceSpec> initiator;
  std::optional<SequenceSpec> responder;
};

struct AdversarySpec {
  adversary::Strategy strategy = adversary::Strategy::PassiveForward;
  Bytes fake_gift;
  Tick processing_delay = 0;
  bool mimic_delays = false;
};

struct Scenario {
  std::string name;
  std::string description;
  protocol::Variant variant = protocol::Variant::DL;
  netsim::Topology topology;
  std::map<NodeId, Tick> processing;
  crypto::Backend backend = crypto::Backend::exp_mod_p;
  std::uint64_t prime = kDefaultPrime;
  std::optional<AdversarySpec> adversary;
  int rounds = 1;
  std::size_t secret_len = 16;
  std::optional<DelaySpec> delays;
  detect::Thresholds thresholds;
  std::uint64_t seed = 0;
  bool sign_pass3 = true;
  Tick timeout_ticks = 0;
};

// Strict: unknown keys and schema violations throw Errc::config with the
// dotted path of the offending key.
Scenario parse_scenario(std::string_view text);
// Fully explicit, pretty-printed form; parse_scenario(canonical_json(s)) == s.
std::string canonical_json(const Scenario& s);

netsim::RunSetup materialize(const Scenario& s, std::uint64_t run_index);
netsim::Trace run(const Scenario& s, std::uint64_t run_index = 0);

struct Baseline {
  Tick initiator_interval = 0;
  Tick responder_interval = 0;
  Tick total = 0;
};

// Honest, undelayed single round on the same topology and crypto.
std::optional<Baseline> calibrate(const Scenario& s);

struct DelayRecord {
  NodeId party;
  NodeId observer;
  detect::Verdict verdict;
  detect::DelayReading reading;
};

struct PartyTiming {
  detect::TimingStats initiator;
  detect::TimingStats responder;
};

struct RunRecord {
  std::uint64_t run = 0;
  std::uint64_t seed = 0;
  bool completed = false;
  std::optional<protocol::AbortReason> abort_reason;
  std::optional<NodeId> abort_party;
  bool recovered_equals_sent = false;
  bool responder_received_fake = false;
  bool adversary_recovered_secret = false;
  bool content_mismatch = false;
  bool responder_opened_forged = false;
  std::optional<bool> authenticated;
  std::optional<PartyTiming> timing;
  std::optional<detect::Verdict> timing_verdict;
  std::vector<DelayRecord> delays;
};

struct RunSummary {
  std::string scenario;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::uint64_t runs = 0;
  std::uint64_t completions = 0;
  std::map<std::string, std::uint64_t> aborts;
  std::optional<Baseline> baseline;
  detect::Thresholds thresholds;
  std::vector<RunRecord> records;

  std::uint64_t abort_count() const;
  // Fraction of runs where pred holds.
  template <typename Pred>
  double rate(Pred pred) const {
    if (records.empty()) return 0.0;
    std::uint64_t n = 0;
    for (const RunRecord& r : records) n += pred(r) ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(records.size());
  }
  double detection_rate(const std::string& rule) const;
};

struct BatchResult {
  RunSummary summary;
  std::vector<netsim::Trace> traces;
};

// Runs seeds seed, seed+1, ..., seed+runs-1.
BatchResult run_batch(const Scenario& s, std::uint64_t runs, bool keep_traces = true);

std::string summary_json(const RunSummary& summary);
std::string summary_text(const RunSummary& summary);
std::string traces_jsonl(const std::vector<netsim::Trace>& traces);

// Throws Errc::io when the destination cannot be written.
void emit(const std::string& content, const std::string& path);

struct ReferenceScenario {
  std::string name;
  std::string json;
};
const std::vector<ReferenceScenario>& reference_scenarios();
const ReferenceScenario* find_reference(std::string_view name);

}  // namespace ddtlab::harness
