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

#include "rawcast/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rawcast/rng.hpp"

namespace rawcast {

BandwidthTrace::BandwidthTrace(std::vector<TraceSample> samples,
                               std::optional<uint64_t> seed)
    : samples_(std::move(samples)), seed_(seed) {
  if (samples_.empty()) throw std::invalid_argument("empty trace");
  if (samples_.front().t != 0.0)
    throw std::invalid_argument("trace must start at t=0");
  for (size_t i = 0; i < samples_.size(); ++i) {
    if (!(samples_[i].rate >= 0) || !std::isfinite(samples_[i].rate))
      throw std::invalid_argument("trace rates must be finite and >= 0");
    if (i > 0 && !(samples_[i].t > samples_[i - 1].t))
      throw std::invalid_argument("trace timestamps must strictly increase");
  }
}

double BandwidthTrace::rate_at(double t) const {
  if (t < 0) t = 0;
  // last sample with sample.t <= t
  size_t lo = 0, hi = samples_.size();
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (samples_[mid].t <= t)
      lo = mid;
    else
      hi = mid;
  }
  return samples_[lo].rate;
}

double BandwidthTrace::mean_rate(double horizon) const {
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  double acc = 0, t = 0;
  for (size_t i = 0; i < samples_.size() && t < horizon; ++i) {
    const double seg_end = i + 1 < samples_.size()
                               ? std::min(samples_[i + 1].t, horizon)
                               : horizon;
    if (seg_end > t) acc += samples_[i].rate * (seg_end - t);
    t = seg_end;
  }
  return acc / horizon;
}

BandwidthTrace generate_trace(const TraceGenParams& p) {
  if (!(p.duration > 0) || !(p.mean_rate > 0) || !(p.step_interval > 0))
    throw std::invalid_argument("trace parameters must be positive");
  const double step = p.step_size < 0 ? 0.1 * p.mean_rate : p.step_size;
  const double lo = 0.1 * p.mean_rate, hi = 2.0 * p.mean_rate;

  Rng rng(Rng::mix(p.seed, 0x7ace));
  std::vector<TraceSample> samples;
  double rate = p.mean_rate;
  for (double t = 0; t < p.duration; t += p.step_interval) {
    samples.push_back({t, rate});
    rate += rng.coin() ? step : -step;
    rate = std::clamp(rate, lo, hi);
  }
  return BandwidthTrace(std::move(samples), p.seed);
}

BandwidthTrace load_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<TraceSample> samples;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    TraceSample s;
    if (ls >> s.t >> s.rate) samples.push_back(s);
  }
  if (samples.empty()) throw std::runtime_error("empty trace file: " + path);
  return BandwidthTrace(std::move(samples));
}

void save_trace(const std::string& path, const BandwidthTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "# t_seconds rate_bytes_per_second\n";
  for (const auto& s : trace.samples()) os << s.t << ' ' << s.rate << '\n';
}

double transfer_time(const BandwidthTrace& trace, double start, double bytes) {
  if (bytes < 0) throw std::invalid_argument("negative byte count");
  if (bytes == 0) return 0;
  if (start < 0) start = 0;

  const auto& samples = trace.samples();
  double remaining = bytes;
  double t = start;
  // first segment containing t
  size_t i = 0;
  while (i + 1 < samples.size() && samples[i + 1].t <= t) ++i;
  for (;; ++i) {
    const double rate = samples[i].rate;
    const bool last = i + 1 == samples.size();
    if (last) {
      if (rate <= 0)
        throw std::runtime_error(
            "link rate is zero for the remainder of the trace");
      return (t - start) + remaining / rate;
    }
    const double seg_end = samples[i + 1].t;
    if (rate > 0) {
      const double capacity = rate * (seg_end - t);
      if (capacity >= remaining) return (t - start) + remaining / rate;
      remaining -= capacity;
    }
    t = seg_end;
  }
}

LinkState::LinkState(BandwidthTrace trace, double propagation_delay)
    : trace_(std::move(trace)), propagation_delay_(propagation_delay) {
  if (propagation_delay < 0)
    throw std::invalid_argument("negative propagation delay");
}

LinkState::Transfer LinkState::submit(double ready_time, double bytes) {
  Transfer tr;
  tr.start = std::max(ready_time, clock_);
  tr.end = tr.start + transfer_time(trace_, tr.start, bytes);
  clock_ = tr.end;
  return tr;
}

double LinkState::transmit_duration(double bytes) {
  const double begin = clock_;
  return submit(begin, bytes).end - begin;
}

}  // namespace rawcast
