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
#include "json.hpp"
#include "test_util.hpp"

using namespace ddtlab;
using namespace ddtlab::harness;

namespace {

const char* kMinimal = R"({
  "name": "t",
  "variant": "DL",
  "topology": {"nodes": ["alice", "bob"], "latency": {"alice-bob": 2}},
  "crypto": {"backend": "exp-mod-p"}
})";

// Parses kMinimal with one top-level key replaced and returns the error path.
std::string error_path(const std::string& key, const nlohmann::json& value) {
  nlohmann::json j = nlohmann::json::parse(kMinimal);
  if (value.is_discarded()) {
    j.erase(key);
  } else {
    j[key] = value;
  }
  try {
    parse_scenario(j.dump());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    std::string what = e.what();
    return what.substr(0, what.find(':'));
  }
  return "<accepted>";
}

nlohmann::json mim_topology(const std::string& cut = "alice-bob") {
  return nlohmann::json::parse(R"({"nodes": ["alice", "bob", "eve"],
    "latency": {"alice-bob": 2, "alice-eve": 1, "bob-eve": 1}, "eve_cut": [")" + cut + "\"]}");
}

}  // namespace

TEST(ParseScenario, MinimalDefaults) {
  Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.rounds, 1);
  EXPECT_EQ(s.secret_len, 16u);
  EXPECT_EQ(s.prime, kDefaultPrime);
  EXPECT_EQ(s.timeout_ticks, 40);
  EXPECT_TRUE(s.sign_pass3);
  EXPECT_FALSE(s.adversary);
  EXPECT_EQ(s.thresholds, detect::Thresholds{});
}

TEST(ParseScenario, ErrorPaths) {
  EXPECT_EQ(error_path("name", nlohmann::json::value_t::discarded), "name");
  EXPECT_EQ(error_path("variant", "TLS"), "variant");
  EXPECT_EQ(error_path("bogus", 1), "bogus");
  EXPECT_EQ(error_path("rounds", 0), "rounds");
  EXPECT_EQ(error_path("topology", nlohmann::json::parse(
                                       R"({"nodes":["alice","bob"],"latency":{"alice-bob":0}})")),
            "topology.latency.alice-bob");
  EXPECT_EQ(error_path("topology", nlohmann::json::parse(
                                       R"({"nodes":["alice","bob"],"latency":{"alice-bob":-1}})")),
            "topology.latency.alice-bob");
  EXPECT_EQ(error_path("topology", nlohmann::json::parse(
                                       R"({"nodes":["alice","bob"],"latency":{"alice-carol":1}})")),
            "topology.latency.alice-carol");
  EXPECT_EQ(error_path("crypto", nlohmann::json::parse(R"({"backend":"exp-mod-p","p":24})")),
            "crypto.p");
  EXPECT_EQ(error_path("crypto", nlohmann::json::parse(R"({"backend":"exp-mod-p","p":23})")),
            "crypto.p");
  EXPECT_EQ(error_path("crypto", nlohmann::json::parse(R"({"backend":"rot13"})")),
            "crypto.backend");
  EXPECT_EQ(error_path("thresholds", nlohmann::json::parse(R"({"shrink":-1})")),
            "thresholds.shrink");
}

TEST(ParseScenario, AdversaryChecks) {
  nlohmann::json j = nlohmann::json::parse(kMinimal);
  j["topology"] = mim_topology();
  j["adversary"] = {{"strategy", "FakeGift"}};
  EXPECT_ERRC(parse_scenario(j.dump()), Errc::config);
  try {
    parse_scenario(j.dump());
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("adversary.fake_gift", 0), 0u);
  }
  j["adversary"]["fake_gift"] = "4646";
  EXPECT_NO_THROW(parse_scenario(j.dump()));
  j["adversary"]["fake_gift"] = "xyz";
  EXPECT_ERRC(parse_scenario(j.dump()), Errc::config);

  j["adversary"] = {{"strategy", "DelayedRelay"}};
  j["variant"] = "PiggyBank";
  EXPECT_ERRC(parse_scenario(j.dump()), Errc::config);

  nlohmann::json no_eve = nlohmann::json::parse(kMinimal);
  no_eve["adversary"] = {{"strategy", "PassiveForward"}};
  EXPECT_ERRC(parse_scenario(no_eve.dump()), Errc::config);
}

TEST(ParseScenario, DelayChecks) {
  nlohmann::json j = nlohmann::json::parse(kMinimal);
  j["rounds"] = 7;
  j["delays"] = {{"delta", 2},
                 {"responder", {{"kind", "m-sequence"}, {"degree", 3}, {"taps", 11}, {"seed", 1}}}};
  EXPECT_NO_THROW(parse_scenario(j.dump()));
  j["rounds"] = 6;
  EXPECT_ERRC(parse_scenario(j.dump()), Errc::config);
  j["rounds"] = 7;
  j["delays"]["responder"]["taps"] = 9;
  EXPECT_ERRC(parse_scenario(j.dump()), Errc::config);
  j["rounds"] = 8;
  j["delays"]["responder"] = {{"kind", "walsh"}, {"row", 3}, {"length", 8}};
  EXPECT_NO_THROW(parse_scenario(j.dump()));
}

TEST(ParseScenario, MalformedJson) { EXPECT_ERRC(parse_scenario("{\"name\": "), Errc::config); }

TEST(CanonicalJson, RoundTripsReferenceScenarios) {
  for (const auto& ref : reference_scenarios()) {
    Scenario s = parse_scenario(ref.json);
    std::string canon = canonical_json(s);
    EXPECT_EQ(canonical_json(parse_scenario(canon)), canon) << ref.name;
  }
}

TEST(Materialize, IndependentSeedStreams) {
  Scenario s = parse_scenario(find_reference("dl_fakegift")->json);
  auto a = materialize(s, 0), b = materialize(s, 1), a2 = materialize(s, 0);
  EXPECT_EQ(a.seed, s.seed);
  EXPECT_EQ(b.seed, s.seed + 1);
  EXPECT_EQ(a.initiator.key, a2.initiator.key);
  EXPECT_NE(a.initiator.key, b.initiator.key);
  EXPECT_NE(a.initiator.key, a.responder.key);
  EXPECT_NE(a.secrets, b.secrets);
  ASSERT_TRUE(a.eve);
  EXPECT_NE(a.eve->own_key, a.initiator.key);

  // Changing the secret length leaves every key untouched.
  Scenario longer = s;
  longer.secret_len = 24;
  auto c = materialize(longer, 0);
  EXPECT_EQ(c.initiator.key, a.initiator.key);
  EXPECT_EQ(c.eve->own_key, a.eve->own_key);
}

TEST(Calibrate, HonestBaseline) {
  auto b = calibrate(parse_scenario(find_reference("midway_mim")->json));
  ASSERT_TRUE(b);
  EXPECT_EQ(b->initiator_interval, 4);
  EXPECT_EQ(b->responder_interval, 4);
  EXPECT_EQ(b->total, 6);
  EXPECT_FALSE(calibrate(parse_scenario(find_reference("piggybank")->json)));
}

TEST(RunBatch, SummaryCounts) {
  BatchResult r = run_batch(parse_scenario(find_reference("ddt_mim")->json), 25);
  EXPECT_EQ(r.summary.runs, 25u);
  EXPECT_EQ(r.traces.size(), 25u);
  EXPECT_EQ(r.summary.completions, 0u);
  EXPECT_EQ(r.summary.aborts.at("signature-mismatch"), 25u);
  for (const auto& rec : r.summary.records) {
    EXPECT_EQ(rec.abort_party, "alice");
    EXPECT_FALSE(rec.responder_opened_forged);
  }
  EXPECT_THROW(run_batch(parse_scenario(kMinimal), 0), Error);
}

TEST(RunBatch, SummaryJsonIsDeterministic) {
  Scenario s = parse_scenario(find_reference("delay_relay")->json);
  std::string a = summary_json(run_batch(s, 5).summary);
  EXPECT_EQ(a, summary_json(run_batch(s, 5).summary));
  auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["runs"], 5);
  EXPECT_EQ(j["per_run"].size(), 5u);
  EXPECT_DOUBLE_EQ(j["detection_rate"]["correlation-failure"].get<double>(), 1.0);
  EXPECT_TRUE(j["correlation"].contains("bob"));
  EXPECT_TRUE(j["rates"]["authenticated"].is_null());
  EXPECT_FALSE(summary_text(run_batch(s, 1).summary).empty());
}

TEST(Emit, UnwritablePathIsIoError) {
  EXPECT_ERRC(emit("x", "/nonexistent-dir/out.json"), Errc::io);
}
