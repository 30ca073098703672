/* Copyright 2026 The rawcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rawcast {

struct TraceSample {
  double t = 0;     // seconds, strictly increasing from 0
  double rate = 0;  // bytes/second, >= 0
};

/// Step-function link rate over time; the last rate holds beyond the final
/// sample.
class BandwidthTrace {
 public:
  explicit BandwidthTrace(std::vector<TraceSample> samples,
                          std::optional<uint64_t> seed = {});

  double rate_at(double t) const;
  const std::vector<TraceSample>& samples() const { return samples_; }
  std::optional<uint64_t> seed() const { return seed_; }

  /// Mean rate over [0, horizon].
  double mean_rate(double horizon) const;

 private:
  std::vector<TraceSample> samples_;
  std::optional<uint64_t> seed_;
};

struct TraceGenParams {
  uint64_t seed = 1;
  double duration = 60.0;       // seconds
  double mean_rate = 2.5e6;     // bytes/second
  double step_interval = 0.1;   // seconds between walk steps
  double step_size = -1;        // bytes/second; < 0 means 10% of mean_rate
};

/// Bounded random walk: every step_interval the rate moves +/- step_size
/// with probability 1/2 each, clamped to [0.1*mean, 2*mean]. Deterministic
/// per seed.
BandwidthTrace generate_trace(const TraceGenParams& params);

/// ASCII lines `t_seconds rate_bytes_per_second`; '#' comments allowed.
BandwidthTrace load_trace(const std::string& path);
void save_trace(const std::string& path, const BandwidthTrace& trace);

/// Fluid FIFO link over a trace with a fixed one-way propagation delay.
class LinkState {
 public:
  explicit LinkState(BandwidthTrace trace, double propagation_delay = 0.002);

  struct Transfer {
    double start = 0;  // transfer begins (after any queue wait)
    double end = 0;    // last byte leaves the link
  };

  /// FIFO submission: the transfer starts at max(ready_time, link clock)
  /// and runs until `bytes` have passed at the trace rate. Advances the
  /// clock to the transfer end. Throws on divergence (zero rate forever).
  Transfer submit(double ready_time, double bytes);

  /// Duration of transmitting `bytes` starting at the current clock;
  /// advances the clock.
  double transmit_duration(double bytes);

  double clock() const { return clock_; }
  double propagation_delay() const { return propagation_delay_; }
  const BandwidthTrace& trace() const { return trace_; }

 private:
  BandwidthTrace trace_;
  double propagation_delay_;
  double clock_ = 0;
};

/// Smallest d such that the trace transfers `bytes` over [start, start+d];
/// closed form over the step function. Exposed for oracle checks.
double transfer_time(const BandwidthTrace& trace, double start, double bytes);

}  // namespace rawcast
