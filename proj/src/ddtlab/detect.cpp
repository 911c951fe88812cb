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

#include "ddtlab/detect.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace ddtlab::detect {

using netsim::EventKind;
using netsim::Trace;
using netsim::TraceEvent;

namespace {

bool is_exchange(const TraceEvent& ev) {
  return ev.kind == EventKind::recv || (ev.kind == EventKind::send && ev.pass_index == 1);
}

std::optional<Tick> session_origin(const Trace& trace, std::uint64_t session_id) {
  std::optional<Tick> origin;
  for (const TraceEvent& ev : trace.events) {
    if (ev.session_id == session_id) origin = std::min(origin.value_or(ev.tick), ev.tick);
  }
  return origin;
}

std::vector<const TraceEvent*> party_events(const Trace& trace, const NodeId& party,
                                            std::uint64_t session_id) {
  std::vector<const TraceEvent*> out;
  for (const TraceEvent& ev : trace.events) {
    if (ev.node == party && ev.session_id == session_id) out.push_back(&ev);
  }
  return out;
}

}  // namespace

TimingStats exchange_times(const Trace& trace, const NodeId& party, std::uint64_t session_id) {
  TimingStats stats;
  stats.party = party;
  auto origin = session_origin(trace, session_id);
  for (const TraceEvent* ev : party_events(trace, party, session_id)) {
    if (is_exchange(*ev)) stats.exchange_ticks.push_back(ev->tick - *origin);
  }
  if (stats.exchange_ticks.size() < 2) {
    fail(Errc::insufficient_data, party + " has fewer than two exchange events in session " +
                                      std::to_string(session_id));
  }
  stats.interval = stats.exchange_ticks[1] - stats.exchange_ticks[0];
  std::int64_t sum = std::accumulate(stats.exchange_ticks.begin(), stats.exchange_ticks.end(),
                                     std::int64_t{0});
  auto count = static_cast<std::int64_t>(stats.exchange_ticks.size());
  std::int64_t g = std::gcd(sum, count);
  stats.mean = {sum / g, count / g};
  return stats;
}

Verdict timing_verdict(const TimingStats& initiator, const TimingStats& responder,
                       Tick baseline_interval, Tick baseline_total, const Thresholds& thresholds) {
  if (baseline_interval <= 0 || baseline_total <= 0) {
    fail(Errc::invalid_parameter, "timing baselines must be positive");
  }
  Verdict v;
  v.thresholds = thresholds;

  const double base = static_cast<double>(baseline_interval);
  const Tick shortest = std::min(initiator.interval, responder.interval);
  v.rules[kIntervalShrink] = {initiator.interval < thresholds.shrink * base ||
                                  responder.interval < thresholds.shrink * base,
                              static_cast<double>(shortest) / base};

  if (initiator.mean.num == 0) {
    v.rules[kMeanRatio] = {true, std::numeric_limits<double>::infinity()};
  } else {
    double ratio = responder.mean.value() / initiator.mean.value();
    v.rules[kMeanRatio] = {std::abs(ratio - 2.0) > thresholds.ratio, ratio};
  }

  const Tick completion =
      std::max(initiator.exchange_ticks.back(), responder.exchange_ticks.back());
  v.rules[kTotalDoubling] = {
      static_cast<double>(completion) > thresholds.doubling * static_cast<double>(baseline_total),
      static_cast<double>(completion) / static_cast<double>(baseline_total)};

  for (const auto& [name, rule] : v.rules) v.overall = v.overall || rule.flag;
  return v;
}

namespace {

constexpr std::uint32_t kTaps3[] = {0xB, 0xD};
constexpr std::uint32_t kTaps4[] = {0x13, 0x19};
constexpr std::uint32_t kTaps5[] = {0x25, 0x29, 0x2F, 0x37, 0x3B, 0x3D};
constexpr std::uint32_t kTaps6[] = {0x43, 0x5B, 0x61, 0x67, 0x6D, 0x73};
constexpr std::uint32_t kTaps7[] = {0x83, 0x89, 0x8F, 0x91, 0x9D, 0xA7, 0xAB, 0xB9, 0xBF,
                                    0xC1, 0xCB, 0xD3, 0xD5, 0xE5, 0xEF, 0xF1, 0xF7, 0xFD};
constexpr std::uint32_t kTaps8[] = {0x11D, 0x12B, 0x12D, 0x14D, 0x15F, 0x163, 0x165, 0x169,
                                    0x171, 0x187, 0x18D, 0x1A9, 0x1C3, 0x1CF, 0x1E7, 0x1F5};

}  // namespace

std::span<const std::uint32_t> primitive_taps(int degree) {
  switch (degree) {
    case 3: return kTaps3;
    case 4: return kTaps4;
    case 5: return kTaps5;
    case 6: return kTaps6;
    case 7: return kTaps7;
    case 8: return kTaps8;
    default: return {};
  }
}

DelaySequence gen_mseq(int degree, std::uint32_t taps, std::uint32_t seed) {
  if (seed == 0) fail(Errc::invalid_parameter, "LFSR seed must be nonzero");
  auto table = primitive_taps(degree);
  if (std::find(table.begin(), table.end(), taps) == table.end()) {
    fail(Errc::unsupported, "taps are not a tabulated primitive polynomial of degree " +
                                std::to_string(degree));
  }
  if (seed >> degree != 0) fail(Errc::invalid_parameter, "LFSR seed wider than the register");

  const std::size_t n = (std::size_t{1} << degree) - 1;
  std::vector<int> bits(n + degree);
  for (int i = 0; i < degree; ++i) bits[i] = (seed >> i) & 1;
  for (std::size_t t = 0; t + degree < bits.size(); ++t) {
    int next = 0;
    for (int i = 0; i < degree; ++i) {
      if ((taps >> i) & 1) next ^= bits[t + i];
    }
    bits[t + degree] = next;
  }

  DelaySequence seq;
  seq.kind = SequenceKind::m_sequence;
  seq.degree = degree;
  seq.taps = taps;
  seq.seed = seed;
  seq.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) seq.values[i] = bits[i] == 0 ? 1 : -1;
  return seq;
}

DelaySequence gen_walsh(int row, int n) {
  if (n < 1 || (n & (n - 1)) != 0) fail(Errc::invalid_parameter, "Walsh length must be a power of two");
  if (row < 0 || row >= n) fail(Errc::invalid_parameter, "Walsh row out of range");
  DelaySequence seq;
  seq.kind = SequenceKind::walsh;
  seq.row = row;
  seq.values.resize(static_cast<std::size_t>(n));
  // Sylvester ordering: H[r][c] = (-1)^popcount(r & c).
  for (int c = 0; c < n; ++c) seq.values[c] = std::popcount(static_cast<unsigned>(row & c)) % 2 ? -1 : 1;
  return seq;
}

std::int64_t correlate(std::span<const int> x, std::span<const int> y, std::size_t lag) {
  if (x.size() != y.size()) fail(Errc::invalid_parameter, "sequence lengths differ");
  if (x.empty() || lag >= x.size()) fail(Errc::invalid_parameter, "lag out of range");
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[(i + lag) % x.size()];
  return sum;
}

std::int64_t correlate(const DelaySequence& x, const DelaySequence& y, std::size_t lag) {
  return correlate(std::span<const int>(x.values), std::span<const int>(y.values), lag);
}

DelayReading read_delays(const Trace& trace, const NodeId& observer, const DelaySequence& expected,
                         Tick delta, Tick baseline_interval) {
  if (delta <= 0) fail(Errc::invalid_parameter, "delta must be positive");
  std::set<std::uint64_t> sessions;
  for (const TraceEvent& ev : trace.events) sessions.insert(ev.session_id);
  if (sessions.size() != expected.size()) {
    fail(Errc::invalid_parameter, "trace has " + std::to_string(sessions.size()) +
                                      " rounds but the sequence has " +
                                      std::to_string(expected.size()));
  }

  DelayReading reading;
  for (std::uint64_t sid : sessions) {
    auto events = party_events(trace, observer, sid);
    std::vector<const TraceEvent*> exchanges;
    for (const TraceEvent* ev : events) {
      if (is_exchange(*ev)) exchanges.push_back(ev);
    }
    Tick residual = -delta;
    if (exchanges.size() >= 2) {
      const Tick t0 = exchanges[0]->tick;
      const Tick t1 = exchanges[1]->tick;
      // The observer's own holds inside its window are known to it.
      Tick own_hold = 0;
      std::optional<Tick> last_recv;
      for (const TraceEvent* ev : events) {
        if (ev->tick < t0 || ev->tick > t1) continue;
        if (ev->kind == EventKind::recv) last_recv = ev->tick;
        if (ev->kind == EventKind::send && ev->tick > t0 && last_recv) {
          own_hold += ev->tick - *last_recv;
        }
      }
      residual = (t1 - t0) - own_hold - baseline_interval;
    }
    reading.residuals.push_back(residual);
    reading.estimates.push_back(2 * residual >= delta ? 1 : -1);
  }

  const auto n = static_cast<double>(expected.size());
  reading.correlation =
      static_cast<double>(correlate(std::span<const int>(reading.estimates),
                                    std::span<const int>(expected.values), 0)) / n;
  for (std::size_t lag = 0; lag < expected.size(); ++lag) {
    reading.lag_profile.push_back(
        static_cast<double>(correlate(std::span<const int>(reading.estimates),
                                      std::span<const int>(expected.values), lag)) / n);
  }
  return reading;
}

NodeId counterpart(const Trace& trace, const NodeId& party) {
  for (const TraceEvent& ev : trace.events) {
    if (ev.node != party && ev.node != netsim::kEve) return ev.node;
  }
  fail(Errc::insufficient_data, "trace has no counterpart for " + party);
}

Verdict delay_verdict(const Trace& trace, const NodeId& party, const DelaySequence& expected,
                      Tick delta, double threshold, Tick baseline_interval) {
  DelayReading reading =
      read_delays(trace, counterpart(trace, party), expected, delta, baseline_interval);
  Verdict v;
  v.thresholds.correlation = threshold;
  v.rules[kCorrelationFailure] = {reading.correlation < threshold, reading.correlation};
  v.overall = v.rules[kCorrelationFailure].flag;
  return v;
}

}  // namespace ddtlab::detect
