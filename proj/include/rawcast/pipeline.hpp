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
#include <functional>
#include <string>
#include <vector>

#include "rawcast/codec.hpp"
#include "rawcast/controller.hpp"
#include "rawcast/netsim.hpp"
#include "rawcast/rawframe.hpp"

namespace rawcast {

// ---------------------------------------------------------------------------
// Wire messages
// ---------------------------------------------------------------------------

/// Uplink frame payload: header plus the selected EncodedTile records.
struct FrameMessage {
  uint64_t frame_id = 0;
  bool key_frame = false;
  int config_id = 0;
  QuantParams quant;
  std::vector<EncodedTile> tiles;
};

/// Downlink detection results echoing the frame id. `error` marks a frame
/// the server could not process.
struct ResultMessage {
  uint64_t frame_id = 0;
  bool error = false;
  std::vector<BoundingBox> detections;
};

std::vector<uint8_t> serialize_message(const FrameMessage& msg);
std::vector<uint8_t> serialize_message(const ResultMessage& msg);
FrameMessage parse_frame_message(std::span<const uint8_t> bytes);
ResultMessage parse_result_message(std::span<const uint8_t> bytes);

// ---------------------------------------------------------------------------
// Stage model
// ---------------------------------------------------------------------------

/// Configured per-stage service times in seconds. Transmit and result
/// return are computed by the link model, not configured.
struct StageTiming {
  double capture = 1.0 / 30;
  double demosaic = 0.025;
  double encode = 0.008;
  double server_decode = 0.0;  // folded into inference by default
  double inference = 0.012;
  double render = 0.002;
};

enum class PipelineMode {
  kPipelined,   // demosaic runs parallel to the offload path
  kSerialized,  // demosaic inline before encode
};

struct FrameMetrics {
  uint64_t frame_id = 0;
  double captured_at = 0;      // capture completion (virtual seconds)
  double e2e_latency = 0;      // capture -> results rendered
  uint64_t transmitted_bytes = 0;
  double transmit_start = 0;   // uplink busy interval
  double transmit_end = 0;
  int tiles_sent = 0;
  int config_used = 0;
  bool key_frame = false;
  bool dropped = false;
};

struct RunSummary {
  int completed = 0;
  double duration = 0;    // first capture -> last render
  double throughput = 0;  // completed / duration
  double mean_latency = 0;
  double p95_latency = 0;
  double mean_frame_bytes = 0;
  int max_in_flight = 0;
  double map50 = -1;  // accuracy handles, filled by eval; -1 = not run
  double f1 = -1;
};

// ---------------------------------------------------------------------------
// Shared client/server frame processing (identical bytes in simulation and
// wall-clock modes)
// ---------------------------------------------------------------------------

/// Encode the planned tiles of a frame; quantization bounds are calibrated
/// over this frame's feature maps and carried in the message.
FrameMessage build_frame_message(uint64_t frame_id, const BayerFrame& frame,
                                 const TransmissionPlan& plan,
                                 const WeightSet& weights,
                                 const TileGrid& grid);

using Detector = std::function<std::vector<BoundingBox>(const BayerFrame&)>;

struct ServerContext {
  WeightSet weights;
  TileGrid grid;
  CfaPattern pattern = CfaPattern::RGGB;
  uint8_t fill_value = 114;
  Detector detector;
};

/// Decode tiles onto the canvas (missing tiles stay at fill).
BayerFrame server_reconstruct(const ServerContext& ctx,
                              const FrameMessage& msg);
/// Full server path: reconstruct, detect, echo the frame id.
ResultMessage server_process(const ServerContext& ctx,
                             const FrameMessage& msg);

// ---------------------------------------------------------------------------
// Virtual-clock simulation
// ---------------------------------------------------------------------------

struct SimulationConfig {
  SceneParams scene;
  int motion = 2;          // object drift, px/frame
  int frames = 90;
  int grid_rows = 4;
  int grid_cols = 3;
  int overlap = 32;
  ControllerConfig controller;
  StageTiming stages;
  PipelineMode mode = PipelineMode::kPipelined;
  bool all_tiles = false;       // ablation: transmit every tile each frame
  uint32_t lum_num = 1;         // luminosity factor applied at capture
  uint32_t lum_den = 1;
  uint8_t fill_value = 114;
  bool server_overlap = true;   // decode pipelined with inference
  int queue_capacity = 2;       // client inter-stage queues
  double propagation_delay = 0.002;

  TileGrid make_grid() const {
    return TileGrid(grid_rows, grid_cols, overlap, scene.width, scene.height);
  }
};

struct SimulationResult {
  RunSummary summary;
  std::vector<FrameMetrics> frames;
  std::vector<std::vector<BoundingBox>> detections;  // per frame, from server
  std::vector<std::vector<BoundingBox>> truths;      // per frame, generator
};

/// Deterministic discrete-event execution of client, link, and server over
/// the replayed trace.
SimulationResult run_simulation(const SimulationConfig& config, const Lut& lut,
                                const WeightSet& weights,
                                const BandwidthTrace& trace,
                                const Detector& detector);

// ---------------------------------------------------------------------------
// Scenario files (key=value)
// ---------------------------------------------------------------------------

struct Scenario {
  SimulationConfig sim;
  std::string trace_path;    // optional; empty = use constant_rate
  double constant_rate = 2.5e6;
  std::string lut_path;      // optional; empty = profile on the fly
  std::string weights_path;  // optional; empty = default weights
};

Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::string& path);

}  // namespace rawcast
