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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rawcast/rawframe.hpp"

namespace rawcast {

// ---------------------------------------------------------------------------
// Tile geometry
// ---------------------------------------------------------------------------

struct TileRect {
  int x = 0, y = 0, w = 0, h = 0;
};

/// r x c grid of core rectangles that exactly cover the frame, each tile
/// expanded by `overlap` pixels on every edge shared with a neighbor.
struct TileGrid {
  int rows = 4;
  int cols = 3;
  int overlap = 32;  // per shared edge, even
  int frame_width = 0;
  int frame_height = 0;

  TileGrid() = default;
  TileGrid(int r, int c, int ov, int fw, int fh);

  int count() const { return rows * cols; }
  int core_width() const { return frame_width / cols; }
  int core_height() const { return frame_height / rows; }

  /// Core rectangle of tile `index` (row-major).
  TileRect core_rect(int index) const;
  /// Core plus overlap margins, clipped at frame borders.
  TileRect tile_rect(int index) const;
};

// ---------------------------------------------------------------------------
// Codec configurations
// ---------------------------------------------------------------------------

/// One of the four encoder settings. Ordering is fixed: id 0 = (stride 2,
/// 8 channels) is the highest-fidelity configuration, id 3 = (stride 4,
/// 4 channels) the smallest.
struct CodecConfig {
  int id = 0;
  int stride = 2;
  int out_channels = 8;

  static constexpr int kCount = 4;
  static const CodecConfig& by_id(int id);
  static const std::array<CodecConfig, 4>& all();
};

/// Feature dims produced by `config` for a tile of the given pixel size.
/// The /2 comes from CFA disassembly.
struct FeatureShape {
  int channels, height, width;
  size_t volume() const { return size_t(channels) * height * width; }
};
FeatureShape feature_shape(const CodecConfig& config, int tile_width,
                           int tile_height);

/// Channel-major real-valued feature tensor.
struct FeatureMap {
  int channels = 0, height = 0, width = 0;
  std::vector<float> data;

  float at(int c, int y, int x) const {
    return data[(size_t(c) * height + y) * width + x];
  }
  float& at(int c, int y, int x) {
    return data[(size_t(c) * height + y) * width + x];
  }
  size_t volume() const { return size_t(channels) * height * width; }
};

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

/// Single-convolution encoder: non-overlapping k x k patches with k = stride
/// over the 4 CFA planes.
struct EncoderWeights {
  std::vector<float> kernel;  // [out_channels, 4, k, k]
  std::vector<float> bias;    // [out_channels]
};

/// Per-configuration decoder head: 1x1 projection to the trunk width
/// followed by nearest-neighbor upsampling by the config stride.
struct DecoderHead {
  std::vector<float> weight;  // [trunk_channels, out_channels]
  std::vector<float> bias;    // [trunk_channels]
};

/// Residual refinement stage: x + conv2(relu(conv1(x))), 3x3 kernels with
/// replicated borders. All-zero weights make the stage an identity.
struct TrunkStage {
  std::vector<float> conv1_w;  // [tc, tc, 3, 3]
  std::vector<float> conv1_b;  // [tc]
  std::vector<float> conv2_w;
  std::vector<float> conv2_b;
  bool is_identity() const;
};

struct DecoderWeights {
  int trunk_channels = 16;
  std::array<DecoderHead, CodecConfig::kCount> heads;
  std::vector<TrunkStage> trunk;  // shared by all heads
  std::vector<float> proj_w;      // [4, trunk_channels]
  std::vector<float> proj_b;      // [4]
};

struct WeightSet {
  std::array<EncoderWeights, CodecConfig::kCount> encoders;
  DecoderWeights decoder;
};

/// Deterministic untrained weights: channel-mean box-filter encoders with a
/// per-channel plane emphasis (so planes stay recoverable), plane-inverting
/// decoder heads, identity trunk, channel-splitting projection. Uniform
/// tiles round-trip exactly.
WeightSet default_weights();

/// "ABWT" container, little-endian f32 tensors. load(save(w)) is bit-exact.
void save_weights(const std::string& path, const WeightSet& weights);
WeightSet load_weights(const std::string& path);

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

struct QuantParams {
  float lo = 0.0f;
  float hi = 1.0f;
};

/// x -> clamp(round((x - lo) * 255 / (hi - lo)), 0, 255); rounding is
/// half-away-from-zero.
std::vector<uint8_t> quantize(const FeatureMap& feat, QuantParams q);
FeatureMap dequantize(std::span<const uint8_t> bytes, QuantParams q,
                      FeatureShape shape);

/// Global min/max over the samples; degenerate ranges widen hi by 1.
QuantParams calibrate(std::span<const FeatureMap> samples);

// ---------------------------------------------------------------------------
// Tile codec
// ---------------------------------------------------------------------------

/// Quantized, entropy-coded feature payload of one tile.
struct EncodedTile {
  int tile_index = 0;
  int config_id = 0;
  QuantParams quant;
  uint32_t raw_len = 0;          // quantized byte count before entropy coding
  std::vector<uint8_t> payload;  // DEFLATE stream
};

/// Cut the frame into grid tiles (core + overlap margins), row-major.
std::vector<BayerFrame> partition(const BayerFrame& frame,
                                  const TileGrid& grid);

FeatureMap encode(const BayerFrame& tile, const CodecConfig& config,
                  const EncoderWeights& weights);
BayerFrame decode(const FeatureMap& feat, const CodecConfig& config,
                  const DecoderWeights& weights, CfaPattern pattern);

EncodedTile encode_tile_full(const BayerFrame& tile, int tile_index,
                             const CodecConfig& config,
                             const WeightSet& weights, QuantParams q);
BayerFrame decode_tile_full(const EncodedTile& tile, const WeightSet& weights,
                            int tile_width, int tile_height,
                            CfaPattern pattern);

/// Write the decoded tiles' core regions into a canvas preset to
/// fill_value; overlap margins are discarded. Missing tiles stay at fill.
BayerFrame assemble_canvas(
    const std::vector<std::pair<int, BayerFrame>>& tiles, const TileGrid& grid,
    CfaPattern pattern, uint8_t fill_value = 114);

/// EncodedTile wire layout: tile_index u8, config_id u8, lo f32, hi f32,
/// raw_len u32, payload_len u32, payload -- little-endian.
void serialize_tile(std::vector<uint8_t>& out, const EncodedTile& tile);
EncodedTile deserialize_tile(std::span<const uint8_t> in, size_t& offset);

// ---------------------------------------------------------------------------
// Distillation weighting and reconstruction metrics
// ---------------------------------------------------------------------------

struct LossReport {
  std::vector<double> mse_losses;   // per config, > 0
  std::vector<double> task_losses;  // optional, aligned with mse_losses
};

/// w_i = (sum_j mse_j) / mse_i. Rejects non-positive losses.
std::vector<double> distill_weights(const LossReport& report);

/// sum_i w_i * task_i.
double kd_loss(std::span<const double> weights,
               std::span<const double> task_losses);

double mse(std::span<const uint8_t> a, std::span<const uint8_t> b);
double mse(std::span<const float> a, std::span<const float> b);
double mse(const BayerFrame& a, const BayerFrame& b);

}  // namespace rawcast
