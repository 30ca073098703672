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

#include "rawcast/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rawcast/deflate.hpp"
#include "rawcast/wire.hpp"

namespace rawcast {

// ---------------------------------------------------------------------------
// Tile geometry
// ---------------------------------------------------------------------------

TileGrid::TileGrid(int r, int c, int ov, int fw, int fh)
    : rows(r), cols(c), overlap(ov), frame_width(fw), frame_height(fh) {
  if (r <= 0 || c <= 0) throw std::invalid_argument("grid must be positive");
  if (ov < 0 || ov % 2) throw std::invalid_argument("overlap must be even");
  if (fw <= 0 || fh <= 0 || fw % c || fh % r)
    throw std::invalid_argument("grid does not evenly cover the frame");
  const int cw = fw / c, ch = fh / r;
  if (cw % 2 || ch % 2)
    throw std::invalid_argument("tile core dims must be even");
  if (cw < 2 * ov || ch < 2 * ov)
    throw std::invalid_argument("tile core smaller than twice the overlap");
}

TileRect TileGrid::core_rect(int index) const {
  if (index < 0 || index >= count())
    throw std::out_of_range("tile index out of range");
  const int r = index / cols, c = index % cols;
  return {c * core_width(), r * core_height(), core_width(), core_height()};
}

TileRect TileGrid::tile_rect(int index) const {
  TileRect rect = core_rect(index);
  const int r = index / cols, c = index % cols;
  if (c > 0) { rect.x -= overlap; rect.w += overlap; }
  if (c < cols - 1) rect.w += overlap;
  if (r > 0) { rect.y -= overlap; rect.h += overlap; }
  if (r < rows - 1) rect.h += overlap;
  return rect;
}

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

const std::array<CodecConfig, 4>& CodecConfig::all() {
  static const std::array<CodecConfig, 4> table = {{
      {0, 2, 8},  // highest fidelity, largest payload
      {1, 2, 4},
      {2, 4, 8},
      {3, 4, 4},  // smallest payload
  }};
  return table;
}

const CodecConfig& CodecConfig::by_id(int id) {
  if (id < 0 || id >= kCount) throw std::out_of_range("bad config id");
  return all()[size_t(id)];
}

FeatureShape feature_shape(const CodecConfig& config, int tile_width,
                           int tile_height) {
  const int div = 2 * config.stride;
  if (tile_width <= 0 || tile_height <= 0 || tile_width % div ||
      tile_height % div)
    throw std::invalid_argument("tile dims not divisible by 2*stride");
  return {config.out_channels, tile_height / div, tile_width / div};
}

// ---------------------------------------------------------------------------
// Default weights
//
// Encoder channel o mixes the per-plane patch means with an emphasis on
// plane (o mod 4):    A[o][p] = (1-a)/4 + a*[p == o mod 4]
// with a = 1/2 for the first group of 4 channels and a = 1/4 for the
// second. Every row sums to 1, so uniform tiles map to uniform features.
// The head inverts the mixing (A1^-1 = 2I - J/4, A2^-1 = 4I - 3J/4),
// recovering the plane means exactly; all values are dyadic rationals, so
// arithmetic is exact in f32.
// ---------------------------------------------------------------------------

namespace {

float mix_coeff(int o, int p) {
  const float a = o < 4 ? 0.5f : 0.25f;
  return (1.0f - a) / 4.0f + (p == o % 4 ? a : 0.0f);
}

float head_coeff(int out_channels, int t, int f) {
  const int p = t % 4;
  if (out_channels == 4) {
    return (f == p ? 2.0f : 0.0f) - 0.25f;  // A1^-1
  }
  if (f < 4)  // A1^-1 / 2
    return (f == p ? 1.0f : 0.0f) - 0.125f;
  return (f - 4 == p ? 2.0f : 0.0f) - 0.375f;  // A2^-1 / 2
}

}  // namespace

bool TrunkStage::is_identity() const {
  auto all_zero = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
  };
  return all_zero(conv1_w) && all_zero(conv1_b) && all_zero(conv2_w) &&
         all_zero(conv2_b);
}

WeightSet default_weights() {
  WeightSet ws;
  for (const auto& cfg : CodecConfig::all()) {
    const int k = cfg.stride, oc = cfg.out_channels;
    EncoderWeights& enc = ws.encoders[size_t(cfg.id)];
    enc.kernel.resize(size_t(oc) * 4 * k * k);
    enc.bias.assign(size_t(oc), 0.0f);
    for (int o = 0; o < oc; ++o) {
      for (int p = 0; p < 4; ++p) {
        const float v = mix_coeff(o, p) / float(k * k);
        for (int i = 0; i < k * k; ++i)
          enc.kernel[(size_t(o) * 4 + p) * k * k + i] = v;
      }
    }
  }

  DecoderWeights& dec = ws.decoder;
  dec.trunk_channels = 16;
  const int tc = dec.trunk_channels;
  for (const auto& cfg : CodecConfig::all()) {
    DecoderHead& head = dec.heads[size_t(cfg.id)];
    head.weight.resize(size_t(tc) * cfg.out_channels);
    head.bias.assign(size_t(tc), 0.0f);
    for (int t = 0; t < tc; ++t)
      for (int f = 0; f < cfg.out_channels; ++f)
        head.weight[size_t(t) * cfg.out_channels + f] =
            head_coeff(cfg.out_channels, t, f);
  }
  dec.trunk.resize(3);
  for (auto& stage : dec.trunk) {
    stage.conv1_w.assign(size_t(tc) * tc * 9, 0.0f);
    stage.conv1_b.assign(size_t(tc), 0.0f);
    stage.conv2_w.assign(size_t(tc) * tc * 9, 0.0f);
    stage.conv2_b.assign(size_t(tc), 0.0f);
  }
  dec.proj_w.assign(size_t(4) * tc, 0.0f);
  dec.proj_b.assign(4, 0.0f);
  for (int p = 0; p < 4; ++p)
    for (int t = 0; t < tc; ++t)
      if (t % 4 == p) dec.proj_w[size_t(p) * tc + t] = 0.25f;
  return ws;
}

// ---------------------------------------------------------------------------
// Encode / decode
// ---------------------------------------------------------------------------

std::vector<BayerFrame> partition(const BayerFrame& frame,
                                  const TileGrid& grid) {
  if (!frame.valid()) throw std::invalid_argument("invalid frame");
  if (frame.width != grid.frame_width || frame.height != grid.frame_height)
    throw std::invalid_argument("grid does not match frame dims");
  std::vector<BayerFrame> tiles;
  tiles.reserve(size_t(grid.count()));
  for (int i = 0; i < grid.count(); ++i) {
    const TileRect r = grid.tile_rect(i);
    BayerFrame tile(r.w, r.h, frame.pattern);
    for (int y = 0; y < r.h; ++y) {
      const uint8_t* src = &frame.pixels[size_t(r.y + y) * frame.width + r.x];
      std::copy(src, src + r.w, &tile.pixels[size_t(y) * r.w]);
    }
    tiles.push_back(std::move(tile));
  }
  return tiles;
}

FeatureMap encode(const BayerFrame& tile, const CodecConfig& config,
                  const EncoderWeights& weights) {
  const FeatureShape shape = feature_shape(config, tile.width, tile.height);
  const int k = config.stride;
  if (weights.kernel.size() != size_t(config.out_channels) * 4 * k * k ||
      weights.bias.size() != size_t(config.out_channels))
    throw std::invalid_argument("encoder weight dims mismatch");

  const PlanarFrame planes = disassemble(tile);
  FeatureMap feat{shape.channels, shape.height, shape.width,
                  std::vector<float>(shape.volume())};
  const int pw = planes.width;
  for (int o = 0; o < shape.channels; ++o) {
    const float* kern = &weights.kernel[size_t(o) * 4 * k * k];
    for (int fy = 0; fy < shape.height; ++fy) {
      for (int fx = 0; fx < shape.width; ++fx) {
        float acc = weights.bias[size_t(o)];
        for (int p = 0; p < 4; ++p) {
          const uint8_t* plane = planes.planes[size_t(p)].data();
          for (int i = 0; i < k; ++i) {
            const uint8_t* row = plane + size_t(fy * k + i) * pw + fx * k;
            const float* kr = kern + (size_t(p) * k + i) * k;
            for (int j = 0; j < k; ++j) acc += kr[j] * float(row[j]);
          }
        }
        feat.at(o, fy, fx) = acc;
      }
    }
  }
  return feat;
}

namespace {

// 3x3 convolution with replicated borders, channel-major buffers.
void conv3x3(const std::vector<float>& in, int channels, int h, int w,
             const std::vector<float>& kernel, const std::vector<float>& bias,
             bool relu, std::vector<float>& out) {
  out.assign(size_t(channels) * h * w, 0.0f);
  auto idx = [&](int c, int y, int x) {
    return (size_t(c) * h + size_t(y)) * w + size_t(x);
  };
  for (int oc = 0; oc < channels; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float acc = bias[size_t(oc)];
        for (int ic = 0; ic < channels; ++ic) {
          const float* kr = &kernel[(size_t(oc) * channels + ic) * 9];
          for (int dy = -1; dy <= 1; ++dy) {
            const int sy = std::clamp(y + dy, 0, h - 1);
            for (int dx = -1; dx <= 1; ++dx) {
              const int sx = std::clamp(x + dx, 0, w - 1);
              acc += kr[(dy + 1) * 3 + (dx + 1)] * in[idx(ic, sy, sx)];
            }
          }
        }
        if (relu && acc < 0) acc = 0;
        out[idx(oc, y, x)] = acc;
      }
    }
  }
}

}  // namespace

BayerFrame decode(const FeatureMap& feat, const CodecConfig& config,
                  const DecoderWeights& weights, CfaPattern pattern) {
  if (feat.channels != config.out_channels || feat.height <= 0 ||
      feat.width <= 0 || feat.data.size() != feat.volume())
    throw std::invalid_argument("feature dims mismatch");
  const int tc = weights.trunk_channels;
  const DecoderHead& head = weights.heads[size_t(config.id)];
  if (head.weight.size() != size_t(tc) * config.out_channels ||
      weights.proj_w.size() != size_t(4) * tc)
    throw std::invalid_argument("decoder weight dims mismatch");

  // Head: 1x1 to trunk width at feature resolution, then nearest-neighbor
  // upsample by the stride.
  const int fh = feat.height, fw = feat.width;
  std::vector<float> mapped(size_t(tc) * fh * fw);
  for (int t = 0; t < tc; ++t) {
    for (int y = 0; y < fh; ++y) {
      for (int x = 0; x < fw; ++x) {
        float acc = head.bias[size_t(t)];
        for (int f = 0; f < feat.channels; ++f)
          acc += head.weight[size_t(t) * feat.channels + f] * feat.at(f, y, x);
        mapped[(size_t(t) * fh + y) * fw + x] = acc;
      }
    }
  }

  const int s = config.stride;
  const int ph = fh * s, pw = fw * s;  // plane resolution (tile/2)
  std::vector<float> up(size_t(tc) * ph * pw);
  for (int t = 0; t < tc; ++t)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        up[(size_t(t) * ph + y) * pw + x] =
            mapped[(size_t(t) * fh + y / s) * fw + x / s];

  // Shared trunk; all-zero stages are exact identities and skipped.
  std::vector<float> cur = std::move(up), tmp, branch;
  for (const auto& stage : weights.trunk) {
    if (stage.conv1_w.size() != size_t(tc) * tc * 9 ||
        stage.conv2_w.size() != size_t(tc) * tc * 9)
      throw std::invalid_argument("trunk weight dims mismatch");
    if (stage.is_identity()) continue;
    conv3x3(cur, tc, ph, pw, stage.conv1_w, stage.conv1_b, true, tmp);
    conv3x3(tmp, tc, ph, pw, stage.conv2_w, stage.conv2_b, false, branch);
    for (size_t i = 0; i < cur.size(); ++i) cur[i] += branch[i];
  }

  // Projection to the 4 CFA planes.
  PlanarFrame planes;
  planes.width = pw;
  planes.height = ph;
  for (auto& plane : planes.planes) plane.resize(size_t(pw) * ph);
  for (int p = 0; p < 4; ++p) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        float acc = weights.proj_b[size_t(p)];
        for (int t = 0; t < tc; ++t)
          acc += weights.proj_w[size_t(p) * tc + t] *
                 cur[(size_t(t) * ph + y) * pw + x];
        const float r = std::round(acc);
        planes.planes[size_t(p)][size_t(y) * pw + x] =
            uint8_t(std::clamp(r, 0.0f, 255.0f));
      }
    }
  }
  return reassemble(planes, pattern);
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

std::vector<uint8_t> quantize(const FeatureMap& feat, QuantParams q) {
  if (!(q.lo < q.hi) || !std::isfinite(q.lo) || !std::isfinite(q.hi))
    throw std::invalid_argument("invalid quant params");
  std::vector<uint8_t> out(feat.data.size());
  const double scale = 255.0 / (double(q.hi) - double(q.lo));
  for (size_t i = 0; i < feat.data.size(); ++i) {
    const double v = std::round((double(feat.data[i]) - q.lo) * scale);
    out[i] = uint8_t(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

FeatureMap dequantize(std::span<const uint8_t> bytes, QuantParams q,
                      FeatureShape shape) {
  if (!(q.lo < q.hi) || !std::isfinite(q.lo) || !std::isfinite(q.hi))
    throw std::invalid_argument("invalid quant params");
  if (bytes.size() != shape.volume())
    throw std::invalid_argument("byte count does not match feature dims");
  FeatureMap feat{shape.channels, shape.height, shape.width,
                  std::vector<float>(shape.volume())};
  const double step = (double(q.hi) - double(q.lo)) / 255.0;
  for (size_t i = 0; i < bytes.size(); ++i)
    feat.data[i] = float(double(q.lo) + double(bytes[i]) * step);
  return feat;
}

QuantParams calibrate(std::span<const FeatureMap> samples) {
  bool any = false;
  float lo = 0, hi = 0;
  for (const auto& s : samples) {
    for (float v : s.data) {
      if (!std::isfinite(v))
        throw std::invalid_argument("non-finite feature sample");
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any) throw std::invalid_argument("calibrate on empty sample set");
  if (lo == hi) hi = lo + 1.0f;
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Full tile path
// ---------------------------------------------------------------------------

EncodedTile encode_tile_full(const BayerFrame& tile, int tile_index,
                             const CodecConfig& config,
                             const WeightSet& weights, QuantParams q) {
  const FeatureMap feat = encode(tile, config, weights.encoders[size_t(config.id)]);
  std::vector<uint8_t> raw = quantize(feat, q);
  EncodedTile out;
  out.tile_index = tile_index;
  out.config_id = config.id;
  out.quant = q;
  out.raw_len = uint32_t(raw.size());
  out.payload = entropy_encode(raw);
  return out;
}

BayerFrame decode_tile_full(const EncodedTile& tile, const WeightSet& weights,
                            int tile_width, int tile_height,
                            CfaPattern pattern) {
  const CodecConfig& config = CodecConfig::by_id(tile.config_id);
  const FeatureShape shape = feature_shape(config, tile_width, tile_height);
  if (tile.raw_len != shape.volume())
    throw std::invalid_argument("raw_len does not match tile dims");
  const std::vector<uint8_t> raw = entropy_decode(tile.payload, tile.raw_len);
  const FeatureMap feat = dequantize(raw, tile.quant, shape);
  return decode(feat, config, weights.decoder, pattern);
}

BayerFrame assemble_canvas(
    const std::vector<std::pair<int, BayerFrame>>& tiles, const TileGrid& grid,
    CfaPattern pattern, uint8_t fill_value) {
  BayerFrame canvas(grid.frame_width, grid.frame_height, pattern, fill_value);
  std::vector<bool> seen(size_t(grid.count()), false);
  for (const auto& [index, tile] : tiles) {
    if (index < 0 || index >= grid.count())
      throw std::invalid_argument("tile index out of range");
    if (seen[size_t(index)])
      throw std::invalid_argument("duplicate tile index");
    seen[size_t(index)] = true;
    const TileRect rect = grid.tile_rect(index);
    const TileRect core = grid.core_rect(index);
    if (tile.width != rect.w || tile.height != rect.h)
      throw std::invalid_argument("tile dims do not match grid");
    const int ox = core.x - rect.x, oy = core.y - rect.y;
    for (int y = 0; y < core.h; ++y) {
      const uint8_t* src = &tile.pixels[size_t(oy + y) * tile.width + ox];
      std::copy(src, src + core.w,
                &canvas.pixels[size_t(core.y + y) * canvas.width + core.x]);
    }
  }
  return canvas;
}

// ---------------------------------------------------------------------------
// Tile wire format
// ---------------------------------------------------------------------------

void serialize_tile(std::vector<uint8_t>& out, const EncodedTile& tile) {
  ByteWriter bw;
  bw.u8(uint8_t(tile.tile_index));
  bw.u8(uint8_t(tile.config_id));
  bw.f32(tile.quant.lo);
  bw.f32(tile.quant.hi);
  bw.u32(tile.raw_len);
  bw.u32(uint32_t(tile.payload.size()));
  auto head = bw.take();
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), tile.payload.begin(), tile.payload.end());
}

EncodedTile deserialize_tile(std::span<const uint8_t> in, size_t& offset) {
  ByteReader br(in.subspan(offset));
  EncodedTile tile;
  tile.tile_index = br.u8();
  tile.config_id = br.u8();
  if (tile.config_id >= CodecConfig::kCount)
    throw std::runtime_error("bad config id in tile record");
  tile.quant.lo = br.f32();
  tile.quant.hi = br.f32();
  tile.raw_len = br.u32();
  const uint32_t payload_len = br.u32();
  auto payload = br.bytes(payload_len);
  tile.payload.assign(payload.begin(), payload.end());
  offset += br.offset();
  return tile;
}

// ---------------------------------------------------------------------------
// Distillation weighting, metrics
// ---------------------------------------------------------------------------

std::vector<double> distill_weights(const LossReport& report) {
  if (report.mse_losses.empty())
    throw std::invalid_argument("empty loss report");
  double sum = 0;
  for (double l : report.mse_losses) {
    if (!(l > 0) || !std::isfinite(l))
      throw std::invalid_argument("MSE losses must be positive and finite");
    sum += l;
  }
  std::vector<double> weights(report.mse_losses.size());
  for (size_t i = 0; i < weights.size(); ++i)
    weights[i] = sum / report.mse_losses[i];
  return weights;
}

double kd_loss(std::span<const double> weights,
               std::span<const double> task_losses) {
  if (weights.size() != task_losses.size())
    throw std::invalid_argument("weight/task length mismatch");
  double total = 0;
  for (size_t i = 0; i < weights.size(); ++i)
    total += weights[i] * task_losses[i];
  return total;
}

double mse(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("mse dims mismatch");
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc / double(a.size());
}

double mse(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("mse dims mismatch");
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc / double(a.size());
}

double mse(const BayerFrame& a, const BayerFrame& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("mse dims mismatch");
  return mse(std::span<const uint8_t>(a.pixels),
             std::span<const uint8_t>(b.pixels));
}

// ---------------------------------------------------------------------------
// Weight container ("ABWT")
// ---------------------------------------------------------------------------

namespace {

constexpr char kWeightMagic[5] = "ABWT";
constexpr uint8_t kWeightVersion = 1;

void write_tensor(ByteWriter& bw, std::span<const float> data,
                  std::span<const uint32_t> dims) {
  bw.u8(uint8_t(dims.size()));
  size_t volume = 1;
  for (uint32_t d : dims) {
    bw.u32(d);
    volume *= d;
  }
  if (volume != data.size()) throw std::logic_error("tensor volume mismatch");
  for (float v : data) bw.f32(v);
}

std::vector<float> read_tensor(ByteReader& br,
                               std::span<const uint32_t> expect_dims) {
  const int rank = br.u8();
  if (rank != int(expect_dims.size()))
    throw std::runtime_error("weight tensor rank mismatch");
  size_t volume = 1;
  for (uint32_t expect : expect_dims) {
    const uint32_t d = br.u32();
    if (d != expect) throw std::runtime_error("weight tensor dims mismatch");
    volume *= d;
  }
  std::vector<float> data(volume);
  for (auto& v : data) {
    v = br.f32();
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite weight value");
  }
  return data;
}

}  // namespace

void save_weights(const std::string& path, const WeightSet& ws) {
  ByteWriter bw;
  bw.magic(kWeightMagic);
  bw.u8(kWeightVersion);
  bw.u8(uint8_t(CodecConfig::kCount));
  for (const auto& cfg : CodecConfig::all()) {
    bw.u8(uint8_t(cfg.id));
    bw.u8(uint8_t(cfg.stride));
    bw.u8(uint8_t(cfg.out_channels));
  }
  const uint32_t tc = uint32_t(ws.decoder.trunk_channels);
  bw.u8(uint8_t(tc));
  bw.u8(uint8_t(ws.decoder.trunk.size()));

  for (const auto& cfg : CodecConfig::all()) {
    const auto& enc = ws.encoders[size_t(cfg.id)];
    const uint32_t k = uint32_t(cfg.stride), oc = uint32_t(cfg.out_channels);
    const uint32_t kdims[4] = {oc, 4, k, k};
    write_tensor(bw, enc.kernel, kdims);
    const uint32_t bdims[1] = {oc};
    write_tensor(bw, enc.bias, bdims);
    const auto& head = ws.decoder.heads[size_t(cfg.id)];
    const uint32_t hdims[2] = {tc, oc};
    write_tensor(bw, head.weight, hdims);
    const uint32_t hbdims[1] = {tc};
    write_tensor(bw, head.bias, hbdims);
  }
  for (const auto& stage : ws.decoder.trunk) {
    const uint32_t cdims[4] = {tc, tc, 3, 3};
    const uint32_t bdims[1] = {tc};
    write_tensor(bw, stage.conv1_w, cdims);
    write_tensor(bw, stage.conv1_b, bdims);
    write_tensor(bw, stage.conv2_w, cdims);
    write_tensor(bw, stage.conv2_b, bdims);
  }
  const uint32_t pdims[2] = {4, tc};
  write_tensor(bw, ws.decoder.proj_w, pdims);
  const uint32_t pbdims[1] = {4};
  write_tensor(bw, ws.decoder.proj_b, pbdims);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  const auto& data = bw.data();
  os.write(reinterpret_cast<const char*>(data.data()),
           std::streamsize(data.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

WeightSet load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<uint8_t> blob((std::istreambuf_iterator<char>(is)),
                            std::istreambuf_iterator<char>());
  ByteReader br(blob);
  br.expect_magic(kWeightMagic);
  if (br.u8() != kWeightVersion)
    throw std::runtime_error("unsupported weight version");
  if (br.u8() != CodecConfig::kCount)
    throw std::runtime_error("unexpected config count");
  for (const auto& cfg : CodecConfig::all()) {
    if (br.u8() != cfg.id || br.u8() != cfg.stride ||
        br.u8() != cfg.out_channels)
      throw std::runtime_error("config table mismatch");
  }
  const uint32_t tc = br.u8();
  const int stages = br.u8();
  if (tc == 0 || tc > 128) throw std::runtime_error("bad trunk width");

  WeightSet ws;
  ws.decoder.trunk_channels = int(tc);
  for (const auto& cfg : CodecConfig::all()) {
    auto& enc = ws.encoders[size_t(cfg.id)];
    const uint32_t k = uint32_t(cfg.stride), oc = uint32_t(cfg.out_channels);
    const uint32_t kdims[4] = {oc, 4, k, k};
    enc.kernel = read_tensor(br, kdims);
    const uint32_t bdims[1] = {oc};
    enc.bias = read_tensor(br, bdims);
    auto& head = ws.decoder.heads[size_t(cfg.id)];
    const uint32_t hdims[2] = {tc, oc};
    head.weight = read_tensor(br, hdims);
    const uint32_t hbdims[1] = {tc};
    head.bias = read_tensor(br, hbdims);
  }
  ws.decoder.trunk.resize(size_t(stages));
  for (auto& stage : ws.decoder.trunk) {
    const uint32_t cdims[4] = {tc, tc, 3, 3};
    const uint32_t bdims[1] = {tc};
    stage.conv1_w = read_tensor(br, cdims);
    stage.conv1_b = read_tensor(br, bdims);
    stage.conv2_w = read_tensor(br, cdims);
    stage.conv2_b = read_tensor(br, bdims);
  }
  const uint32_t pdims[2] = {4, tc};
  ws.decoder.proj_w = read_tensor(br, pdims);
  const uint32_t pbdims[1] = {4};
  ws.decoder.proj_b = read_tensor(br, pbdims);
  if (!br.done()) throw std::runtime_error("trailing bytes in weight file");
  return ws;
}

}  // namespace rawcast
