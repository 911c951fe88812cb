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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every check here is exact; the only tolerance is the 1 s wall-clock bound
// on the normal-timing run.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ddtlab/harness.hpp"

namespace {

using namespace ddtlab;
using harness::RunRecord;
using harness::Scenario;

struct Outcome {
  bool ok = true;
  std::ostringstream note;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (!ok) note << "; ";
      else note.str("");
      ok = false;
      note << what;
    }
  }
};

Scenario reference(const std::string& name) {
  const harness::ReferenceScenario* ref = harness::find_reference(name);
  if (!ref) fail(Errc::config, "missing reference scenario " + name);
  return harness::parse_scenario(ref->json);
}

bool ticks_are(const detect::TimingStats& t, Tick a, Tick b) {
  return t.exchange_ticks == std::vector<Tick>{a, b};
}

template <typename Pred>
bool all_runs(const harness::RunSummary& s, Pred pred) {
  return std::all_of(s.records.begin(), s.records.end(), pred);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome normal_timing() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  Scenario s = reference("normal_dl");
  harness::BatchResult b = harness::run_batch(s, 1);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const RunRecord& r = b.summary.records.at(0);
  o.require(r.timing.has_value(), "no timing");
  if (!r.timing) return o;
  const auto& [a, bob] = *r.timing;
  o.require(ticks_are(a, 0, 4), "alice ticks");
  o.require(ticks_are(bob, 2, 6), "bob ticks");
  o.require(a.interval == 4 && bob.interval == 4, "intervals");
  o.require(a.mean == detect::Rational{2, 1} && bob.mean == detect::Rational{4, 1}, "means");
  o.require(bob.mean == detect::Rational{2 * a.mean.num, a.mean.den}, "ratio");
  o.require(secs < 1.0, "runtime " + fmt(secs) + " s");
  if (o.ok) o.note << "alice (0,4) bob (2,6) T=4 means 2,4 ratio 2, " << fmt(secs) << " s";
  return o;
}

Outcome midway_timing() {
  Outcome o;
  harness::BatchResult b = harness::run_batch(reference("midway_mim"), 1);
  const RunRecord& r = b.summary.records.at(0);
  o.require(r.timing.has_value(), "no timing");
  if (!r.timing) return o;
  const auto& [a, bob] = *r.timing;
  o.require(ticks_are(a, 0, 2), "alice ticks");
  o.require(ticks_are(bob, 4, 6), "bob ticks");
  o.require(a.interval == 2 && bob.interval == 2, "intervals");
  o.require(a.mean == detect::Rational{1, 1} && bob.mean == detect::Rational{5, 1}, "means");
  if (o.ok) o.note << "alice (0,2) bob (4,6) T=2 means 1,5 ratio 5";
  return o;
}

Outcome distant_doubling() {
  Outcome o;
  Scenario s = reference("distant_mim");
  harness::BatchResult b = harness::run_batch(s, 1);
  const RunRecord& r = b.summary.records.at(0);
  std::optional<harness::Baseline> base = harness::calibrate(s);
  o.require(r.timing.has_value() && base.has_value(), "no timing");
  if (!o.ok) return o;
  Tick done = std::max(r.timing->initiator.exchange_ticks.back(),
                       r.timing->responder.exchange_ticks.back());
  o.require(done == 12, "completion " + std::to_string(done));
  o.require(base->total == 6, "baseline " + std::to_string(base->total));
  if (o.ok) o.note << "completion 12 vs baseline 6";
  return o;
}

Outcome verdict_separation() {
  Outcome o;
  auto overall = [](const RunRecord& r) { return r.timing_verdict && r.timing_verdict->overall; };
  auto clean = [](const RunRecord& r) { return r.timing_verdict && !r.timing_verdict->overall; };
  o.require(all_runs(harness::run_batch(reference("normal_dl"), 100, false).summary, clean),
            "normal flagged");
  o.require(all_runs(harness::run_batch(reference("midway_mim"), 100, false).summary, overall),
            "midway missed");
  o.require(all_runs(harness::run_batch(reference("distant_mim"), 100, false).summary, overall),
            "distant missed");
  if (o.ok) o.note << "normal 0/100 flagged, midway 100/100, distant 100/100";
  return o;
}

Outcome dl_correctness() {
  Outcome o;
  for (crypto::Backend be : {crypto::Backend::exp_mod_p, crypto::Backend::xor_pad}) {
    Scenario s = reference("normal_dl");
    s.backend = be;
    harness::RunSummary sum = harness::run_batch(s, 1000, false).summary;
    double rate = sum.rate([](const RunRecord& r) { return r.recovered_equals_sent; });
    o.require(rate == 1.0, std::string(crypto::to_string(be)) + " recovery " + fmt(rate));
  }
  if (o.ok) o.note << "1000/1000 per backend";
  return o;
}

Outcome mim_narrative() {
  Outcome o;
  harness::RunSummary fake = harness::run_batch(reference("dl_fakegift"), 100, false).summary;
  o.require(all_runs(fake, [](const RunRecord& r) { return r.adversary_recovered_secret; }),
            "eve missed S");
  o.require(all_runs(fake, [](const RunRecord& r) { return r.responder_received_fake; }),
            "bob missed F");
  o.require(all_runs(fake, [](const RunRecord& r) { return r.content_mismatch; }),
            "digest check missed FakeGift");
  harness::RunSummary relay = harness::run_batch(reference("midway_mim"), 100, false).summary;
  o.require(all_runs(relay, [](const RunRecord& r) { return !r.content_mismatch; }),
            "digest check flagged DelayedRelay");
  if (o.ok) o.note << "FakeGift 100/100 flagged, DelayedRelay 0/100";
  return o;
}

Outcome ddt_soundness() {
  Outcome o;
  harness::RunSummary honest = harness::run_batch(reference("ddt_honest"), 1000, false).summary;
  o.require(honest.abort_count() == 0, "honest aborts");
  o.require(all_runs(honest, [](const RunRecord& r) { return r.recovered_equals_sent; }),
            "honest recovery");
  for (const char* name : {"ddt_mim", "ddt_delayed_relay", "ddt_replay"}) {
    harness::RunSummary sum = harness::run_batch(reference(name), 1000, false).summary;
    o.require(all_runs(sum,
                       [](const RunRecord& r) {
                         return !r.completed &&
                                r.abort_reason == protocol::AbortReason::signature_mismatch &&
                                !r.responder_opened_forged;
                       }),
              std::string(name) + " not rejected");
  }
  if (o.ok) o.note << "honest 0 aborts; FakeGift, DelayedRelay, Replay 1000/1000 signature-mismatch";
  return o;
}

Outcome implicit_chain() {
  Outcome o;
  Scenario s = reference("implicit_chain");
  o.require(s.rounds == 10, "rounds " + std::to_string(s.rounds));
  netsim::RunResult res = netsim::run(harness::materialize(s, 0));
  o.require(res.rounds.size() == 10 && res.shared_R.has_value(), "run shape");
  if (!o.ok) return o;
  for (const netsim::RoundOutcome& r : res.rounds)
    o.require(r.recovered && *r.recovered == r.sent, "round recovery");

  // Masked stream as it would cross the wire, then decoded by a receiver
  // holding the true R or a wrong one.
  std::vector<Bytes> masked;
  Bytes prev = res.shared_R->bytes();
  for (const netsim::RoundOutcome& r : res.rounds) {
    masked.push_back(protocol::chain_encode(r.sent, prev));
    prev = r.sent;
  }
  auto decode_all = [&](const Bytes& r0) {
    std::vector<Bytes> out;
    Bytes p = r0;
    for (const Bytes& m : masked) {
      out.push_back(protocol::chain_decode(m, p));
      p = out.back();
    }
    return out;
  };
  std::vector<Bytes> good = decode_all(res.shared_R->bytes());
  for (std::size_t i = 0; i < good.size(); ++i)
    o.require(good[i] == res.rounds[i].sent, "true R decode");
  std::mt19937_64 rng(2026);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    Bytes wrong(res.shared_R->bytes().size());
    do {
      for (auto& b : wrong) b = static_cast<std::uint8_t>(rng());
    } while (wrong == res.shared_R->bytes());
    mismatches += protocol::chain_decode(masked[0], wrong) != res.rounds[0].sent ? 1 : 0;
  }
  o.require(mismatches == 100, "wrong R mismatches " + std::to_string(mismatches));
  if (o.ok) o.note << "10/10 rounds decoded; 100/100 wrong R fail at round 1";
  return o;
}

Outcome piggy_bank() {
  Outcome o;
  harness::RunSummary honest = harness::run_batch(reference("piggybank"), 100, false).summary;
  o.require(all_runs(honest, [](const RunRecord& r) { return r.authenticated == true; }),
            "honest not authenticated");
  harness::RunSummary forged =
      harness::run_batch(reference("piggybank_tamper"), 100, false).summary;
  o.require(all_runs(forged, [](const RunRecord& r) { return r.authenticated == false; }),
            "substituted box authenticated");

  std::mt19937_64 rng(9);
  auto rand_bytes = [&](std::size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
  };
  int flipped_ok = 0, swapped_ok = 0;
  for (int i = 0; i < 100; ++i) {
    for (int mode = 0; mode < 2; ++mode) {
      crypto::LockKey box_key =
          i % 2 ? crypto::keygen_exp(harness::kDefaultPrime, rng()) : crypto::keygen_xor(rng(), 96);
      protocol::SessionState alice = protocol::make_session(
          protocol::Role::initiator, protocol::Variant::PiggyBank, "alice", "bob", 1, {});
      protocol::SessionState bob = protocol::make_session(
          protocol::Role::responder, protocol::Variant::PiggyBank, "bob", "alice", 1, box_key);
      alice.identity = crypto::SharedSecret(rand_bytes(16));
      protocol::Authority registry;
      registry.register_party("alice", *alice.identity);
      Bytes secret = rand_bytes(16);
      crypto::Digest id = crypto::digest(secret);
      protocol::PiggyBox box = protocol::pb_issue_box(bob);
      box = protocol::pb_deposit(alice, box, secret, Bytes(id.bytes.begin(), id.bytes.end()),
                                 rng());
      if (mode == 0) {
        std::size_t bit = rng() % 256;
        box.letter_signature->bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        flipped_ok += protocol::pb_open(bob, box, registry).authenticated ? 0 : 1;
      } else {
        Bytes fake = protocol::pb_seal_layout(rand_bytes(16), rand_bytes(32));
        box.sealed_contents =
            crypto::lock_message(box.box_key, crypto::pack_message(box.box_key, fake));
        swapped_ok += protocol::pb_open(bob, box, registry).authenticated ? 0 : 1;
      }
    }
  }
  o.require(flipped_ok == 100, "bit flip rejected " + std::to_string(flipped_ok) + "/100");
  o.require(swapped_ok == 100, "substitution rejected " + std::to_string(swapped_ok) + "/100");
  if (o.ok)
    o.note << "honest 100/100; tamper run 100/100, bit flip 100/100, substitution 100/100 rejected";
  return o;
}

Outcome sequences() {
  Outcome o;
  for (int k = 3; k <= 8; ++k) {
    std::int64_t n = (std::int64_t{1} << k) - 1;
    for (std::uint32_t taps : detect::primitive_taps(k)) {
      detect::DelaySequence m = detect::gen_mseq(k, taps, 1);
      o.require(static_cast<std::int64_t>(m.size()) == n, "mseq length k=" + std::to_string(k));
      if (!o.ok) return o;
      for (std::size_t lag = 0; lag < m.size(); ++lag)
        o.require(detect::correlate(m, m, lag) == (lag == 0 ? n : -1),
                  "autocorrelation k=" + std::to_string(k) + " lag " + std::to_string(lag));
    }
  }
  for (int n = 2; n <= 64; n *= 2)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        o.require(detect::correlate(detect::gen_walsh(i, n), detect::gen_walsh(j, n), 0) == 0,
                  "walsh n=" + std::to_string(n));
  if (o.ok) o.note << "m-sequences k=3..8 two-valued; Walsh rows orthogonal for n<=64";
  return o;
}

Outcome delay_detection() {
  Outcome o;
  auto readings = [](const harness::RunSummary& s) {
    std::vector<std::pair<double, bool>> out;
    for (const RunRecord& r : s.records)
      for (const harness::DelayRecord& d : r.delays)
        out.emplace_back(d.reading.correlation, d.verdict.overall);
    return out;
  };
  auto span_of = [](const std::vector<std::pair<double, bool>>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return "[" + fmt(lo->first) + ", " + fmt(hi->first) + "]";
  };
  Scenario hs = reference("delay_honest");
  Scenario rs = reference("delay_relay");
  o.require(hs.delays && hs.delays->delta == 2 && hs.rounds == 7, "honest scenario shape");
  o.require(rs.delays && rs.delays->delta == 2 && rs.rounds == 7, "relay scenario shape");
  auto honest = readings(harness::run_batch(hs, 100, false).summary);
  auto relay = readings(harness::run_batch(rs, 100, false).summary);
  o.require(honest.size() == 100 && relay.size() == 100, "reading count");
  if (!o.ok) return o;
  o.require(std::all_of(honest.begin(), honest.end(),
                        [](auto& p) { return p.first == 1.0 && !p.second; }),
            "honest correlation " + span_of(honest));
  o.require(std::all_of(relay.begin(), relay.end(),
                        [](auto& p) { return p.first < 0.8 && p.second; }),
            "relay correlation " + span_of(relay));
  if (o.ok)
    o.note << "honest correlation " << span_of(honest) << " unflagged; relay " << span_of(relay)
           << " flagged";
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const harness::ReferenceScenario& ref : harness::reference_scenarios()) {
    Scenario s = harness::parse_scenario(ref.json);
    auto once = [&] {
      harness::BatchResult b = harness::run_batch(s, 4);
      return std::pair{harness::traces_jsonl(b.traces), harness::summary_json(b.summary)};
    };
    o.require(once() == once(), ref.name + " differs");
  }
  if (o.ok)
    o.note << harness::reference_scenarios().size() << " reference scenarios byte-identical";
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "timing reproduction (normal)", normal_timing},
      {2, "timing reproduction (midway MIM)", midway_timing},
      {3, "distant Eve doubles completion", distant_doubling},
      {4, "timing verdict separation", verdict_separation},
      {5, "DL correctness", dl_correctness},
      {6, "MIM narrative", mim_narrative},
      {7, "DDT soundness and completeness", ddt_soundness},
      {8, "implicit chaining", implicit_chain},
      {9, "piggy bank", piggy_bank},
      {10, "sequence properties", sequences},
      {11, "delay-signature detection", delay_detection},
      {12, "determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.note.str(std::string("exception: ") + e.what());
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s %2d %s: %s\n", o.ok ? "PASS" : "FAIL", c.id, c.title, o.note.str().c_str());
  }
  std::printf("%d/12 criteria passed\n", 12 - failed);
  return failed ? 1 : 0;
}
