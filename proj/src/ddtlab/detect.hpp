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

// Detectors over simulation traces.
//
// Timing: each party's two exchange ticks (initiator: pass-1 send and pass-2
// arrival; responder: pass-1 and pass-3 arrivals), measured from the
// session's first event. An attacker in the middle shortens the interval
// between them and skews the ratio of the two parties' mean ticks away from
// the honest value of 2. The ratio rule needs both parties' numbers, i.e. a
// channel Eve cannot touch; the harness plays that channel.
//
// Delay signatures: a party holds each emission for delta ticks when its
// sequence symbol is +1 and not at all when it is -1. The honest peer sees the
// hold inside its own round trip, so correlating the recovered symbols with
// the expected sequence gives 1.0. A relaying Eve answers from her own clock
// and the correlation collapses.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddtlab/netsim.hpp"

namespace ddtlab::detect {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
};

struct TimingStats {
  NodeId party;
  std::vector<Tick> exchange_ticks;  // relative to the session origin
  Tick interval = 0;
  Rational mean;
};

TimingStats exchange_times(const netsim::Trace& trace, const NodeId& party,
                           std::uint64_t session_id);

inline const std::string kIntervalShrink = "interval-shrink";
inline const std::string kMeanRatio = "mean-ratio-deviation";
inline const std::string kTotalDoubling = "total-time-doubling";
inline const std::string kCorrelationFailure = "correlation-failure";

struct Thresholds {
  double shrink = 0.75;
  double ratio = 0.5;
  double doubling = 1.5;
  double correlation = 0.8;

  bool operator==(const Thresholds&) const = default;
};

struct RuleResult {
  bool flag = false;
  double evidence = 0.0;  // +inf allowed for the ratio rule

  bool operator==(const RuleResult&) const = default;
};

struct Verdict {
  std::map<std::string, RuleResult> rules;
  bool overall = false;
  Thresholds thresholds;

  bool operator==(const Verdict&) const = default;
};

// Completion is the later of the two parties' last exchange ticks.
Verdict timing_verdict(const TimingStats& initiator, const TimingStats& responder,
                       Tick baseline_interval, Tick baseline_total, const Thresholds& thresholds);

enum class SequenceKind { m_sequence, walsh };

struct DelaySequence {
  SequenceKind kind = SequenceKind::m_sequence;
  std::vector<int> values;  // each +1 or -1
  int degree = 0;           // m-sequence
  std::uint32_t taps = 0;   // m-sequence polynomial, bit i = coefficient of x^i
  std::uint32_t seed = 0;   // m-sequence initial state, bit i = s[i]
  int row = 0;              // walsh

  std::size_t size() const { return values.size(); }
};

// Primitive polynomials accepted by gen_mseq, by degree (3..8).
std::span<const std::uint32_t> primitive_taps(int degree);

DelaySequence gen_mseq(int degree, std::uint32_t taps, std::uint32_t seed);
DelaySequence gen_walsh(int row, int n);

std::int64_t correlate(std::span<const int> x, std::span<const int> y, std::size_t lag);
std::int64_t correlate(const DelaySequence& x, const DelaySequence& y, std::size_t lag);

struct DelayReading {
  std::vector<Tick> residuals;  // one per round; absent rounds read as -delta
  std::vector<int> estimates;
  double correlation = 0.0;     // lag 0, normalized by n
  std::vector<double> lag_profile;
};

// Reads the delay signature of `party` from its peer's round trips.
// baseline_interval is the observer's calibrated zero-delay interval.
DelayReading read_delays(const netsim::Trace& trace, const NodeId& observer,
                         const DelaySequence& expected, Tick delta, Tick baseline_interval);

// The observer is the honest counterpart of `party` found in the trace.
Verdict delay_verdict(const netsim::Trace& trace, const NodeId& party,
                      const DelaySequence& expected, Tick delta, double threshold,
                      Tick baseline_interval);

NodeId counterpart(const netsim::Trace& trace, const NodeId& party);

}  // namespace ddtlab::detect
