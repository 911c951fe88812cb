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
#include "test_util.hpp"

using namespace ddtlab;
using namespace ddtlab::protocol;
using crypto::keygen_exp;
using crypto::keygen_xor;
using adversary::EveState;
using adversary::Strategy;

namespace {

std::uint8_t pow23(std::uint64_t b, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) r = r * b % 23;
  return static_cast<std::uint8_t>(r);
}

EveState make_eve(Strategy s, LockKey key) {
  EveState eve;
  eve.strategy = s;
  eve.own_key = std::move(key);
  eve.cut.insert({"alice", "bob"});
  eve.latency_to = {{"alice", 1}, {"bob", 1}};
  return eve;
}

SessionState party(Role r, Variant v, LockKey k) {
  return r == Role::initiator ? make_session(r, v, "alice", "bob", 1, std::move(k))
                              : make_session(r, v, "bob", "alice", 1, std::move(k));
}

void share_r(SessionState& a, SessionState& b) {
  Authority auth;
  auth.register_party("alice", SharedSecret(Bytes(16, 1)));
  auth.register_party("bob", SharedSecret(Bytes(16, 2)));
  auth.handshake(5, a, b);
}

}  // namespace

TEST(FakeGift, ExpDeskNarrative) {
  const std::uint64_t eA = 3, eB = 5, eE = 7;
  SessionState alice = party(Role::initiator, Variant::DL, LockKey::exp_mod_p(23, eA));
  SessionState bob = party(Role::responder, Variant::DL, LockKey::exp_mod_p(23, eB));
  EveState eve = make_eve(Strategy::FakeGift, LockKey::exp_mod_p(23, eE));
  eve.fake_gift = Bytes{1, 9};

  Envelope e1 = dl_pass1(alice, Bytes{1, 5}, 0);
  ASSERT_EQ(e1.payload, (Bytes{1, 10}));
  auto out = adversary::eve_step(eve, e1, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].destination, "alice");
  EXPECT_EQ(out[0].env.payload, (Bytes{1, pow23(10, eE)}));

  auto e3 = dl_pass3(alice, out[0].env, 2);
  ASSERT_TRUE(e3);
  EXPECT_EQ(e3->payload, (Bytes{1, pow23(5, eE)}));
  out = adversary::eve_step(eve, *e3, 3);
  ASSERT_TRUE(eve.recovered);
  EXPECT_EQ(*eve.recovered, (Bytes{1, 5}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].destination, "bob");
  EXPECT_EQ(out[0].send_tick, 3);
  EXPECT_TRUE(out[0].forged);

  auto b2 = dl_pass2(bob, out[0].env, 4);
  out = adversary::eve_step(eve, *b2, 5);
  ASSERT_EQ(out.size(), 1u);
  auto got = dl_open(bob, out[0].env, 6);
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, eve.fake_gift);
}

TEST(DelayedRelay, ForwardsGenuineContent) {
  constexpr std::uint64_t p = 18446744073709551557ull;
  SessionState alice = party(Role::initiator, Variant::DL, keygen_exp(p, 1));
  SessionState bob = party(Role::responder, Variant::DL, keygen_exp(p, 2));
  EveState eve = make_eve(Strategy::DelayedRelay, keygen_exp(p, 3));
  Bytes s = crypto::pack_message(alice.own_key, bytes_of("sixteen byte gift"));

  auto out = adversary::eve_step(eve, dl_pass1(alice, s, 0), 1);
  auto e3 = dl_pass3(alice, out.at(0).env, 2);
  out = adversary::eve_step(eve, *e3, 3);
  auto b2 = dl_pass2(bob, out.at(0).env, 4);
  out = adversary::eve_step(eve, *b2, 5);
  auto got = dl_open(bob, out.at(0).env, 6);
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, s);
  EXPECT_TRUE(compare_digests(crypto::digest(s), *got));
  EXPECT_EQ(*eve.recovered, bytes_of("sixteen byte gift"));
}

TEST(PassiveForward, IdenticalEnvelopesAndDdtPasses) {
  constexpr std::uint64_t p = 18446744073709551557ull;
  SessionState alice = party(Role::initiator, Variant::DDT, keygen_exp(p, 1));
  SessionState bob = party(Role::responder, Variant::DDT, keygen_exp(p, 2));
  share_r(alice, bob);
  EveState eve = make_eve(Strategy::PassiveForward, keygen_exp(p, 3));
  Bytes s = crypto::pack_message(alice.own_key, bytes_of("gift"));

  Envelope e1 = ddt_pass1(alice, s);
  auto f1 = adversary::eve_step(eve, e1, 1);
  ASSERT_EQ(f1.size(), 1u);
  EXPECT_EQ(f1[0].env, e1);
  EXPECT_FALSE(f1[0].forged);
  auto e2 = ddt_pass2(bob, f1[0].env);
  auto f2 = adversary::eve_step(eve, *e2, 3);
  EXPECT_EQ(f2[0].env, *e2);
  auto e3 = ddt_pass3(alice, f2[0].env);
  auto f3 = adversary::eve_step(eve, *e3, 5);
  EXPECT_EQ(f3[0].env, *e3);
  EXPECT_EQ(ddt_open(bob, f3[0].env), s);
  EXPECT_FALSE(eve.session_with_alice);
}

TEST(Adversary, EveNeverHoldsR) {
  constexpr std::uint64_t p = 18446744073709551557ull;
  for (Strategy st : {Strategy::FakeGift, Strategy::DelayedRelay}) {
    SessionState alice = party(Role::initiator, Variant::DDT, keygen_exp(p, 1));
    SessionState bob = party(Role::responder, Variant::DDT, keygen_exp(p, 2));
    share_r(alice, bob);
    EveState eve = make_eve(st, keygen_exp(p, 3));
    eve.fake_gift = bytes_of("F");
    eve.guessed_R = SharedSecret(Bytes(16, 9));
    auto out = adversary::eve_step(eve, ddt_pass1(alice, crypto::pack_message(alice.own_key, bytes_of("S"))), 1);
    ASSERT_TRUE(eve.session_with_alice);
    EXPECT_FALSE(eve.session_with_alice->shared_R);
    // Alice rejects Eve's pass 2 either way.
    EXPECT_FALSE(ddt_pass3(alice, out.at(0).env));
    EXPECT_EQ(alice.abort_reason, AbortReason::signature_mismatch);
  }
}

TEST(Adversary, OffCutEnvelopeNotInterceptable) {
  EveState eve = make_eve(Strategy::PassiveForward, keygen_xor(1, 4));
  Envelope env;
  env.sender = "alice";
  env.receiver = "carol";
  EXPECT_ERRC(adversary::eve_step(eve, env, 0), Errc::not_interceptable);
  EXPECT_TRUE(eve.recorded_envelopes.empty());
}

TEST(Replay, NoMaterialWhenNothingRecorded) {
  EveState eve = make_eve(Strategy::Replay, keygen_xor(1, 4));
  EXPECT_ERRC(adversary::replay_signature(eve, 2), Errc::no_material);
}

TEST(Replay, Pass1SignatureOnPass2IsRejected) {
  constexpr std::uint64_t p = 18446744073709551557ull;
  SessionState alice = party(Role::initiator, Variant::DDT, keygen_exp(p, 1));
  SessionState bob = party(Role::responder, Variant::DDT, keygen_exp(p, 2));
  share_r(alice, bob);
  EveState eve = make_eve(Strategy::Replay, keygen_exp(p, 3));
  Envelope e1 = ddt_pass1(alice, crypto::pack_message(alice.own_key, bytes_of("S")));
  auto f1 = adversary::eve_step(eve, e1, 1);
  auto e2 = ddt_pass2(bob, f1.at(0).env);
  ASSERT_TRUE(e2);
  auto f2 = adversary::eve_step(eve, *e2, 3);
  EXPECT_EQ(f2.at(0).env.signature, e1.signature);
  EXPECT_EQ(adversary::replay_signature(eve, 2), *e1.signature);
  EXPECT_FALSE(ddt_pass3(alice, f2[0].env));
  EXPECT_EQ(alice.abort_reason, AbortReason::signature_mismatch);
}

TEST(Replay, DuplicatePass1HitsPhaseGuard) {
  constexpr std::uint64_t p = 18446744073709551557ull;
  SessionState alice = party(Role::initiator, Variant::DDT, keygen_exp(p, 1));
  SessionState bob = party(Role::responder, Variant::DDT, keygen_exp(p, 2));
  share_r(alice, bob);
  EveState eve = make_eve(Strategy::Replay, keygen_exp(p, 3));
  Envelope e1 = ddt_pass1(alice, crypto::pack_message(alice.own_key, bytes_of("S")));
  adversary::eve_step(eve, e1, 1);
  ASSERT_TRUE(ddt_pass2(bob, e1));
  Envelope again = e1;
  again.signature = adversary::replay_signature(eve, 1);
  EXPECT_TRUE(crypto::verify(*bob.shared_R, again.payload, *again.signature));
  EXPECT_ERRC(ddt_pass2(bob, again), Errc::protocol_order);
}

TEST(Adversary, StrategyNames) {
  for (Strategy s : {Strategy::PassiveForward, Strategy::FakeGift, Strategy::DelayedRelay,
                     Strategy::Replay}) {
    EXPECT_EQ(adversary::strategy_from_string(adversary::to_string(s)), s);
  }
  EXPECT_ERRC(adversary::strategy_from_string("Bribe"), Errc::invalid_parameter);
}
