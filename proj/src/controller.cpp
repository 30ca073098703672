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

#include "rawcast/controller.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rawcast {

Lut::Lut(std::vector<ProfileEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("empty LUT");
  for (const auto& e : entries_) {
    if (!(e.tile_bytes > 0) || !(e.tx_threshold > 0))
      throw std::invalid_argument("LUT entry needs positive size/threshold");
    if (e.accuracy < 0 || e.accuracy > 1)
      throw std::invalid_argument("LUT accuracy outside [0,1]");
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) {
              if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
              if (a.bandwidth() != b.bandwidth())
                return a.bandwidth() < b.bandwidth();
              return a.config.id < b.config.id;
            });
}

void Lut::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "# config_id accuracy tile_bytes tx_threshold_ms\n";
  for (const auto& e : entries_) {
    os << e.config.id << ' ' << e.accuracy << ' ' << e.tile_bytes << ' '
       << e.tx_threshold * 1000.0 << '\n';
  }
}

Lut Lut::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<ProfileEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id;
    double acc, bytes, thr_ms;
    if (!(ls >> id >> acc >> bytes >> thr_ms))
      throw std::runtime_error("malformed LUT line: " + line);
    entries.push_back({CodecConfig::by_id(id), acc, bytes, thr_ms / 1000.0});
  }
  return Lut(std::move(entries));
}

Lut build_lut(std::span<const ProfileMeasurement> measurements,
              double tx_threshold) {
  if (!(tx_threshold > 0))
    throw std::invalid_argument("tx_threshold must be positive");
  std::array<bool, CodecConfig::kCount> seen{};
  std::vector<ProfileEntry> entries;
  for (const auto& m : measurements) {
    const CodecConfig& cfg = CodecConfig::by_id(m.config_id);
    if (seen[size_t(cfg.id)])
      throw std::invalid_argument("duplicate config measurement");
    seen[size_t(cfg.id)] = true;
    if (!(m.mean_tile_bytes > 0))
      throw std::invalid_argument("tile size must be positive");
    entries.push_back({cfg, m.accuracy, m.mean_tile_bytes, tx_threshold});
  }
  for (bool s : seen)
    if (!s) throw std::invalid_argument("missing config measurement");
  return Lut(std::move(entries));
}

double estimate_bandwidth(const BandwidthSample& sample) {
  if (!(sample.t_end > sample.t_start))
    throw std::invalid_argument("empty transfer interval");
  if (sample.bytes < 0) throw std::invalid_argument("negative byte count");
  return sample.bytes / (sample.t_end - sample.t_start);
}

std::vector<int> select_tiles(const TileGrid& grid,
                              std::span<const BoundingBox> boxes) {
  std::vector<int> selected;
  for (int t = 0; t < grid.count(); ++t) {
    const TileRect r = grid.tile_rect(t);
    for (const auto& b : boxes) {
      const double ix = std::max(double(r.x), b.x);
      const double iy = std::max(double(r.y), b.y);
      const double ax = std::min(double(r.x + r.w), b.x + b.w);
      const double ay = std::min(double(r.y + r.h), b.y + b.h);
      if (ax > ix && ay > iy) {  // positive-area intersection
        selected.push_back(t);
        break;
      }
    }
  }
  return selected;
}

const ProfileEntry& select_config(const Lut& lut, int tile_count, double eab) {
  if (tile_count < 0) throw std::invalid_argument("negative tile count");
  const ProfileEntry* fallback = &lut.entries().front();
  for (const auto& e : lut.entries()) {
    if (e.bandwidth() * tile_count <= eab) return e;
    if (e.bandwidth() < fallback->bandwidth()) fallback = &e;
  }
  // Nothing fits: lowest-bandwidth entry keeps the stream alive.
  return *fallback;
}

Controller::Controller(Lut lut, TileGrid grid, ControllerConfig config)
    : lut_(std::move(lut)), grid_(grid), config_(config) {
  if (config_.window_length < 1)
    throw std::invalid_argument("window length must be >= 1");
}

void Controller::deliver_results(std::vector<BoundingBox> results) {
  pending_ = std::move(results);
}

TransmissionPlan Controller::adapt(double eab,
                                   const std::vector<BoundingBox>& fresh) {
  deliver_results(fresh);
  return adapt(eab);
}

TransmissionPlan Controller::adapt(double eab) {
  if (pending_) {
    last_results_.clear();
    for (auto& b : *pending_) {
      if (b.confidence >= config_.min_confidence) last_results_.push_back(b);
    }
    pending_.reset();
  }

  TransmissionPlan plan;
  if (frame_count_ == 1) {
    plan.is_key_frame = true;
    plan.tiles.resize(size_t(grid_.count()));
    for (int i = 0; i < grid_.count(); ++i) plan.tiles[size_t(i)] = i;
    plan.config = lut_.highest().config;
  } else {
    plan.is_key_frame = false;
    plan.tiles = select_tiles(grid_, last_results_);
    plan.config = select_config(lut_, int(plan.tiles.size()), eab).config;
  }
  frame_count_ = frame_count_ == config_.window_length ? 1 : frame_count_ + 1;
  return plan;
}

}  // namespace rawcast
