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

#include "rawcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rawcast/wire.hpp"

namespace rawcast {

// ---------------------------------------------------------------------------
// Wire messages
// ---------------------------------------------------------------------------

namespace {

constexpr char kFrameMagic[5] = "ABFM";
constexpr char kResultMagic[5] = "ABRM";
constexpr uint8_t kWireVersion = 1;

}  // namespace

std::vector<uint8_t> serialize_message(const FrameMessage& msg) {
  ByteWriter bw;
  bw.magic(kFrameMagic);
  bw.u8(kWireVersion);
  bw.u64(msg.frame_id);
  bw.u8(msg.key_frame ? 1 : 0);
  bw.u8(uint8_t(msg.config_id));
  bw.f32(msg.quant.lo);
  bw.f32(msg.quant.hi);
  bw.u16(uint16_t(msg.tiles.size()));
  std::vector<uint8_t> out = bw.take();
  for (const auto& tile : msg.tiles) serialize_tile(out, tile);
  return out;
}

FrameMessage parse_frame_message(std::span<const uint8_t> bytes) {
  ByteReader br(bytes);
  br.expect_magic(kFrameMagic);
  if (br.u8() != kWireVersion)
    throw std::runtime_error("unsupported frame message version");
  FrameMessage msg;
  msg.frame_id = br.u64();
  const uint8_t flags = br.u8();
  if (flags > 1) throw std::runtime_error("unknown frame flags");
  msg.key_frame = flags & 1;
  msg.config_id = br.u8();
  if (msg.config_id >= CodecConfig::kCount)
    throw std::runtime_error("bad config id");
  msg.quant.lo = br.f32();
  msg.quant.hi = br.f32();
  const int count = br.u16();
  size_t offset = br.offset();
  for (int i = 0; i < count; ++i)
    msg.tiles.push_back(deserialize_tile(bytes, offset));
  if (offset != bytes.size())
    throw std::runtime_error("trailing bytes in frame message");
  return msg;
}

std::vector<uint8_t> serialize_message(const ResultMessage& msg) {
  ByteWriter bw;
  bw.magic(kResultMagic);
  bw.u8(kWireVersion);
  bw.u64(msg.frame_id);
  bw.u8(msg.error ? 1 : 0);
  bw.u16(uint16_t(msg.detections.size()));
  for (const auto& d : msg.detections) {
    bw.u16(uint16_t(d.class_id));
    bw.f32(float(d.confidence));
    bw.f32(float(d.x));
    bw.f32(float(d.y));
    bw.f32(float(d.w));
    bw.f32(float(d.h));
  }
  return bw.take();
}

ResultMessage parse_result_message(std::span<const uint8_t> bytes) {
  ByteReader br(bytes);
  br.expect_magic(kResultMagic);
  if (br.u8() != kWireVersion)
    throw std::runtime_error("unsupported result message version");
  ResultMessage msg;
  msg.frame_id = br.u64();
  const uint8_t status = br.u8();
  if (status > 1) throw std::runtime_error("unknown result status");
  msg.error = status == 1;
  const int count = br.u16();
  for (int i = 0; i < count; ++i) {
    BoundingBox d;
    d.class_id = br.u16();
    d.confidence = br.f32();
    d.x = br.f32();
    d.y = br.f32();
    d.w = br.f32();
    d.h = br.f32();
    msg.detections.push_back(d);
  }
  if (!br.done()) throw std::runtime_error("trailing bytes in result message");
  return msg;
}

// ---------------------------------------------------------------------------
// Shared frame processing
// ---------------------------------------------------------------------------

namespace {

BayerFrame crop(const BayerFrame& frame, const TileRect& r) {
  BayerFrame tile(r.w, r.h, frame.pattern);
  for (int y = 0; y < r.h; ++y) {
    const uint8_t* src = &frame.pixels[size_t(r.y + y) * frame.width + r.x];
    std::copy(src, src + r.w, &tile.pixels[size_t(y) * r.w]);
  }
  return tile;
}

}  // namespace

FrameMessage build_frame_message(uint64_t frame_id, const BayerFrame& frame,
                                 const TransmissionPlan& plan,
                                 const WeightSet& weights,
                                 const TileGrid& grid) {
  FrameMessage msg;
  msg.frame_id = frame_id;
  msg.key_frame = plan.is_key_frame;
  msg.config_id = plan.config.id;
  if (plan.tiles.empty()) {
    msg.quant = QuantParams{0.0f, 1.0f};
    return msg;
  }

  const EncoderWeights& enc = weights.encoders[size_t(plan.config.id)];
  std::vector<FeatureMap> features;
  features.reserve(plan.tiles.size());
  for (int index : plan.tiles)
    features.push_back(encode(crop(frame, grid.tile_rect(index)), plan.config,
                              enc));
  msg.quant = calibrate(features);

  for (size_t i = 0; i < plan.tiles.size(); ++i) {
    EncodedTile tile;
    tile.tile_index = plan.tiles[i];
    tile.config_id = plan.config.id;
    tile.quant = msg.quant;
    std::vector<uint8_t> raw = quantize(features[i], msg.quant);
    tile.raw_len = uint32_t(raw.size());
    tile.payload = entropy_encode(raw);
    msg.tiles.push_back(std::move(tile));
  }
  return msg;
}

BayerFrame server_reconstruct(const ServerContext& ctx,
                              const FrameMessage& msg) {
  std::vector<std::pair<int, BayerFrame>> decoded;
  decoded.reserve(msg.tiles.size());
  for (const auto& tile : msg.tiles) {
    const TileRect r = ctx.grid.tile_rect(tile.tile_index);
    decoded.emplace_back(
        tile.tile_index,
        decode_tile_full(tile, ctx.weights, r.w, r.h, ctx.pattern));
  }
  return assemble_canvas(decoded, ctx.grid, ctx.pattern, ctx.fill_value);
}

ResultMessage server_process(const ServerContext& ctx,
                             const FrameMessage& msg) {
  ResultMessage result;
  result.frame_id = msg.frame_id;
  try {
    const BayerFrame canvas = server_reconstruct(ctx, msg);
    result.detections = ctx.detector(canvas);
  } catch (const std::exception&) {
    result.error = true;
    result.detections.clear();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Virtual-clock simulation
//
// Every stage is a FIFO single server; client stages are joined by bounded
// queues (capacity K) with blocking-after-service, so the whole schedule
// follows per-frame recurrences and stays deterministic.
// ---------------------------------------------------------------------------

SimulationResult run_simulation(const SimulationConfig& config, const Lut& lut,
                                const WeightSet& weights,
                                const BandwidthTrace& trace,
                                const Detector& detector) {
  if (config.frames <= 0) throw std::invalid_argument("need frames > 0");
  const TileGrid grid = config.make_grid();
  const int n = config.frames;
  const int K = std::max(1, config.queue_capacity);
  const StageTiming& st = config.stages;
  const bool pipelined = config.mode == PipelineMode::kPipelined;

  SceneStream stream(config.scene, config.motion);
  Controller controller(lut, grid, config.controller);
  LinkState uplink(trace, config.propagation_delay);
  LinkState downlink(trace, config.propagation_delay);

  ServerContext server{weights, grid, config.scene.pattern, config.fill_value,
                       detector};

  const double inf_ = -std::numeric_limits<double>::infinity();
  auto at = [&](const std::vector<double>& v, int i) {
    return i >= 0 ? v[size_t(i)] : inf_;
  };

  std::vector<double> cap_done(n), handoff_cap(n);
  std::vector<double> dem_start(n), dem_done(n), handoff_dem(n);
  std::vector<double> enc_start(n), enc_done(n);
  std::vector<double> tx_start(n), tx_end(n);
  std::vector<double> dec_done(n), inf_done(n);
  std::vector<double> result_at(n);
  std::vector<double> rend_start(n), rend_done(n);

  SimulationResult out;
  out.frames.resize(size_t(n));
  out.detections.resize(size_t(n));
  out.truths.resize(size_t(n));

  int newest_applied = -1;  // newest frame whose results were delivered

  for (int i = 0; i < n; ++i) {
    // --- capture (saturated source) ---
    const double cap_start = i == 0 ? 0.0 : handoff_cap[size_t(i - 1)];
    cap_done[size_t(i)] = cap_start + st.capture;
    if (pipelined) {
      handoff_cap[size_t(i)] = std::max(
          {cap_done[size_t(i)], at(dem_start, i - K), at(enc_start, i - K)});
    } else {
      handoff_cap[size_t(i)] =
          std::max(cap_done[size_t(i)], at(dem_start, i - K));
    }

    // --- demosaic ---
    dem_start[size_t(i)] =
        std::max(handoff_cap[size_t(i)], at(handoff_dem, i - 1));
    dem_done[size_t(i)] = dem_start[size_t(i)] + st.demosaic;
    if (pipelined) {
      // hands off to the render join
      handoff_dem[size_t(i)] =
          std::max(dem_done[size_t(i)], at(rend_start, i - K));
    } else {
      // hands off to encode
      handoff_dem[size_t(i)] =
          std::max(dem_done[size_t(i)], at(enc_start, i - K));
    }

    // --- encode (controller runs at encode start) ---
    const double enc_ready =
        pipelined ? handoff_cap[size_t(i)] : handoff_dem[size_t(i)];
    enc_start[size_t(i)] = std::max(enc_ready, at(enc_done, i - 1));

    // newest completed transfer defines EAB; cold start is optimistic
    double eab = std::numeric_limits<double>::infinity();
    for (int j = i - 1; j >= 0; --j) {
      if (tx_end[size_t(j)] <= enc_start[size_t(i)] &&
          tx_end[size_t(j)] > tx_start[size_t(j)]) {
        eab = estimate_bandwidth({double(out.frames[size_t(j)].transmitted_bytes),
                                  tx_start[size_t(j)], tx_end[size_t(j)]});
        break;
      }
    }
    // newest results that have reached the client
    for (int j = i - 1; j > newest_applied; --j) {
      if (result_at[size_t(j)] <= enc_start[size_t(i)]) {
        controller.deliver_results(out.detections[size_t(j)]);
        newest_applied = j;
        break;
      }
    }

    TransmissionPlan plan = controller.adapt(eab);
    if (config.all_tiles) {
      plan.tiles.resize(size_t(grid.count()));
      for (int t = 0; t < grid.count(); ++t) plan.tiles[size_t(t)] = t;
      if (!plan.is_key_frame)
        plan.config = select_config(lut, grid.count(), eab).config;
    }

    SyntheticScene scene = stream.frame(i);
    if (config.lum_num != config.lum_den)
      scene.frame =
          scale_luminosity(scene.frame, config.lum_num, config.lum_den);
    out.truths[size_t(i)] = scene.truth;

    const FrameMessage msg =
        build_frame_message(uint64_t(i), scene.frame, plan, weights, grid);
    const std::vector<uint8_t> wire = serialize_message(msg);
    enc_done[size_t(i)] = enc_start[size_t(i)] + st.encode;

    // --- uplink ---
    const auto tx = uplink.submit(enc_done[size_t(i)], double(wire.size()));
    tx_start[size_t(i)] = tx.start;
    tx_end[size_t(i)] = tx.end;
    const double arrive = tx.end + uplink.propagation_delay();

    // --- server ---
    const ResultMessage result = server_process(server, msg);
    out.detections[size_t(i)] = result.detections;
    if (config.server_overlap && st.server_decode > 0) {
      const double dstart = std::max(arrive, at(dec_done, i - 1));
      dec_done[size_t(i)] = dstart + st.server_decode;
      const double istart = std::max(dec_done[size_t(i)], at(inf_done, i - 1));
      inf_done[size_t(i)] = istart + st.inference;
    } else {
      const double istart = std::max(arrive, at(inf_done, i - 1));
      inf_done[size_t(i)] = istart + st.server_decode + st.inference;
      dec_done[size_t(i)] = istart + st.server_decode;
    }

    // --- downlink ---
    const std::vector<uint8_t> result_wire = serialize_message(result);
    const auto rx =
        downlink.submit(inf_done[size_t(i)], double(result_wire.size()));
    result_at[size_t(i)] = rx.end + downlink.propagation_delay();

    // --- render join ---
    const double ready = pipelined
                             ? std::max(dem_done[size_t(i)], result_at[size_t(i)])
                             : result_at[size_t(i)];
    rend_start[size_t(i)] = std::max(ready, at(rend_done, i - 1));
    rend_done[size_t(i)] = rend_start[size_t(i)] + st.render;

    FrameMetrics& fm = out.frames[size_t(i)];
    fm.frame_id = uint64_t(i);
    fm.captured_at = cap_done[size_t(i)];
    fm.e2e_latency = rend_done[size_t(i)] - cap_done[size_t(i)];
    fm.transmitted_bytes = wire.size();
    fm.transmit_start = tx.start;
    fm.transmit_end = tx.end;
    fm.tiles_sent = int(msg.tiles.size());
    fm.config_used = plan.config.id;
    fm.key_frame = plan.is_key_frame;
  }

  // --- summary ---
  RunSummary& s = out.summary;
  s.completed = n;
  s.duration = rend_done[size_t(n - 1)] - cap_done[0];
  s.throughput = s.duration > 0 ? double(n) / s.duration : 0.0;
  std::vector<double> latencies;
  double bytes_total = 0;
  for (const auto& fm : out.frames) {
    latencies.push_back(fm.e2e_latency);
    bytes_total += double(fm.transmitted_bytes);
  }
  s.mean_latency =
      std::accumulate(latencies.begin(), latencies.end(), 0.0) / double(n);
  std::vector<double> sorted = latencies;
  std::sort(sorted.begin(), sorted.end());
  s.p95_latency = sorted[size_t(std::min<double>(
      double(n) - 1, std::ceil(0.95 * double(n)) - 1))];
  s.mean_frame_bytes = bytes_total / double(n);

  // frames simultaneously captured-but-not-rendered
  std::vector<std::pair<double, int>> events;
  for (int i = 0; i < n; ++i) {
    events.push_back({cap_done[size_t(i)], +1});
    events.push_back({rend_done[size_t(i)], -1});
  }
  std::sort(events.begin(), events.end());
  int depth = 0;
  for (const auto& [t, d] : events) {
    depth += d;
    s.max_in_flight = std::max(s.max_in_flight, depth);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::pair<uint32_t, uint32_t> parse_fraction(const std::string& v) {
  const auto slash = v.find('/');
  if (slash == std::string::npos)
    return {uint32_t(std::stoul(v)), 1};
  return {uint32_t(std::stoul(v.substr(0, slash))),
          uint32_t(std::stoul(v.substr(slash + 1)))};
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed scenario line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    SimulationConfig& c = sc.sim;

    if (key == "width") c.scene.width = std::stoi(value);
    else if (key == "height") c.scene.height = std::stoi(value);
    else if (key == "pattern") c.scene.pattern = cfa_from_name(value);
    else if (key == "objects") c.scene.object_count = std::stoi(value);
    else if (key == "seed") c.scene.seed = std::stoull(value);
    else if (key == "min_size") c.scene.min_size = std::stoi(value);
    else if (key == "max_size") c.scene.max_size = std::stoi(value);
    else if (key == "margin") c.scene.margin = std::stoi(value);
    else if (key == "background") c.scene.background = std::stoi(value);
    else if (key == "noise") c.scene.noise = std::stoi(value);
    else if (key == "motion") c.motion = std::stoi(value);
    else if (key == "frames") c.frames = std::stoi(value);
    else if (key == "rows") c.grid_rows = std::stoi(value);
    else if (key == "cols") c.grid_cols = std::stoi(value);
    else if (key == "overlap") c.overlap = std::stoi(value);
    else if (key == "window") c.controller.window_length = std::stoi(value);
    else if (key == "min_confidence")
      c.controller.min_confidence = std::stod(value);
    else if (key == "capture_ms") c.stages.capture = std::stod(value) / 1e3;
    else if (key == "demosaic_ms") c.stages.demosaic = std::stod(value) / 1e3;
    else if (key == "encode_ms") c.stages.encode = std::stod(value) / 1e3;
    else if (key == "decode_ms")
      c.stages.server_decode = std::stod(value) / 1e3;
    else if (key == "inference_ms")
      c.stages.inference = std::stod(value) / 1e3;
    else if (key == "render_ms") c.stages.render = std::stod(value) / 1e3;
    else if (key == "mode") {
      if (value == "pipelined") c.mode = PipelineMode::kPipelined;
      else if (value == "serialized") c.mode = PipelineMode::kSerialized;
      else throw std::runtime_error("unknown mode: " + value);
    }
    else if (key == "all_tiles") c.all_tiles = std::stoi(value) != 0;
    else if (key == "luminosity") {
      auto [num, den] = parse_fraction(value);
      c.lum_num = num;
      c.lum_den = den;
    }
    else if (key == "fill") c.fill_value = uint8_t(std::stoi(value));
    else if (key == "server_overlap") c.server_overlap = std::stoi(value) != 0;
    else if (key == "queue_capacity") c.queue_capacity = std::stoi(value);
    else if (key == "propagation_ms")
      c.propagation_delay = std::stod(value) / 1e3;
    else if (key == "trace") sc.trace_path = value;
    else if (key == "rate") sc.constant_rate = std::stod(value);
    else if (key == "lut") sc.lut_path = value;
    else if (key == "weights") sc.weights_path = value;
    else throw std::runtime_error("unknown scenario key: " + key);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_scenario_text(buf.str());
}

}  // namespace rawcast
