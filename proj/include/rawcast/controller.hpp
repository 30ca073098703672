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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rawcast/codec.hpp"
#include "rawcast/rawframe.hpp"

namespace rawcast {

/// Offline-profiled operating point of one codec configuration.
struct ProfileEntry {
  CodecConfig config;
  double accuracy = 0;      // P_i, profiled mAP in [0,1]
  double tile_bytes = 0;    // FS_i, mean encoded tile size
  double tx_threshold = 0;  // T^t_i, seconds

  /// B_i = FS_i / T^t_i, bytes/second per tile.
  double bandwidth() const { return tile_bytes / tx_threshold; }
};

/// Decision table, kept sorted by accuracy descending (ties: smaller
/// bandwidth first).
class Lut {
 public:
  explicit Lut(std::vector<ProfileEntry> entries);

  const std::vector<ProfileEntry>& entries() const { return entries_; }
  const ProfileEntry& highest() const { return entries_.front(); }

  /// ASCII lines `config_id accuracy tile_bytes tx_threshold_ms`.
  void save(const std::string& path) const;
  static Lut load(const std::string& path);

 private:
  std::vector<ProfileEntry> entries_;
};

/// One measurement per config from offline profiling.
struct ProfileMeasurement {
  int config_id = 0;
  double accuracy = 0;
  double mean_tile_bytes = 0;
};

/// B_i from the measurements and a common transmission-time threshold.
Lut build_lut(std::span<const ProfileMeasurement> measurements,
              double tx_threshold);

/// Uplink transfer observation; timestamps bound the transfer itself, not
/// queueing.
struct BandwidthSample {
  double bytes = 0;
  double t_start = 0;
  double t_end = 0;
};

/// EAB = bytes / (t_end - t_start). Rejects empty intervals.
double estimate_bandwidth(const BandwidthSample& sample);

/// Tiles whose core-plus-overlap rectangle intersects any box with positive
/// area; ascending, each index once.
std::vector<int> select_tiles(const TileGrid& grid,
                              std::span<const BoundingBox> boxes);

/// First entry in accuracy-descending order with B_i * tile_count <= eab;
/// falls back to the lowest-bandwidth entry when nothing fits.
const ProfileEntry& select_config(const Lut& lut, int tile_count, double eab);

struct TransmissionPlan {
  std::vector<int> tiles;
  CodecConfig config;
  bool is_key_frame = false;
};

struct ControllerConfig {
  int window_length = 30;        // l: frames per key-frame window
  double min_confidence = 0.25;  // detections below this are ignored
};

/// Per-stream adaptation state machine. Frame 1 of every window is a key
/// frame: all tiles, highest configuration, bandwidth check bypassed.
class Controller {
 public:
  Controller(Lut lut, TileGrid grid, ControllerConfig config = {});

  /// Plan the next frame. Any results queued via deliver_results are
  /// applied first (frame-boundary delivery).
  TransmissionPlan adapt(double eab);
  TransmissionPlan adapt(double eab, const std::vector<BoundingBox>& fresh);

  /// Queue detection results; they take effect at the next adapt call.
  void deliver_results(std::vector<BoundingBox> results);

  int frame_count() const { return frame_count_; }
  const std::vector<BoundingBox>& last_results() const {
    return last_results_;
  }
  const Lut& lut() const { return lut_; }
  const TileGrid& grid() const { return grid_; }
  const ControllerConfig& config() const { return config_; }

 private:
  Lut lut_;
  TileGrid grid_;
  ControllerConfig config_;
  int frame_count_ = 1;  // 1..l, cyclic
  std::vector<BoundingBox> last_results_;
  std::optional<std::vector<BoundingBox>> pending_;
};

}  // namespace rawcast
