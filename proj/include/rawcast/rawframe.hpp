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
#include <span>
#include <string>
#include <vector>

namespace rawcast {

/// 2x2 repeating CFA cell orderings.
enum class CfaPattern : uint8_t { RGGB = 0, BGGR = 1, GRBG = 2, GBRG = 3 };

const char* cfa_name(CfaPattern p);
CfaPattern cfa_from_name(const std::string& name);

/// Color channel (0=R, 1=G, 2=B) sampled at pixel (x, y) under pattern p.
int cfa_channel(CfaPattern p, int x, int y);

/// Single-channel pre-demosaic sensor frame, 8-bit samples.
struct BayerFrame {
  int width = 0;   // even
  int height = 0;  // even
  CfaPattern pattern = CfaPattern::RGGB;
  std::vector<uint8_t> pixels;  // row-major, width*height

  BayerFrame() = default;
  BayerFrame(int w, int h, CfaPattern p, uint8_t fill = 0);

  uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  uint8_t& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  bool valid() const;
};

/// The four CFA-site channels of a Bayer frame, each at half resolution.
/// Plane order is the raster order of the 2x2 cell: site(0,0), site(0,1),
/// site(1,0), site(1,1) -- independent of color semantics.
struct PlanarFrame {
  int width = 0;   // = BayerFrame.width / 2
  int height = 0;  // = BayerFrame.height / 2
  std::array<std::vector<uint8_t>, 4> planes;
};

/// Interleaved 8-bit RGB.
struct RgbFrame {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // 3 * width * height

  RgbFrame() = default;
  RgbFrame(int w, int h) : width(w), height(h), rgb(size_t(w) * h * 3, 0) {}
  uint8_t at(int x, int y, int c) const {
    return rgb[(size_t(y) * width + x) * 3 + c];
  }
  uint8_t& at(int x, int y, int c) {
    return rgb[(size_t(y) * width + x) * 3 + c];
  }
};

/// Axis-aligned detection/ground-truth box, top-left origin.
struct BoundingBox {
  int class_id = 0;
  double x = 0, y = 0, w = 0, h = 0;
  double confidence = 1.0;  // 1.0 for ground truth

  double area() const { return w * h; }
};

/// Intersection-over-union of two boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// A generated Bayer frame together with exact ground truth.
struct SyntheticScene {
  BayerFrame frame;
  std::vector<BoundingBox> truth;
  uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// CFA channel disassembly / reassembly
// ---------------------------------------------------------------------------

/// Split a Bayer frame into its 4 CFA-site planes. Plane p, position (i,j)
/// holds the frame pixel at (2j + p%2, 2i + p/2).
PlanarFrame disassemble(const BayerFrame& frame);

/// Exact inverse of disassemble.
BayerFrame reassemble(const PlanarFrame& planar, CfaPattern pattern);

// ---------------------------------------------------------------------------
// Render-path utilities
// ---------------------------------------------------------------------------

/// Bilinear demosaic with replicated borders. Missing channels are the mean
/// of the available same-channel neighbors.
RgbFrame demosaic_bilinear(const BayerFrame& frame);

/// Scale every sample by the rational factor num/den (0 < num/den <= 1),
/// flooring the result. Throws std::invalid_argument for factors outside
/// (0, 1].
BayerFrame scale_luminosity(const BayerFrame& frame, uint32_t num,
                            uint32_t den);

/// Tenengrad sharpness: sum of squared Sobel gradient magnitudes over
/// interior pixels. Requires width >= 3 and height >= 3.
double tenengrad(std::span<const uint8_t> image, int width, int height);

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SceneParams {
  uint64_t seed = 1;
  int width = 768;   // even, >= 64
  int height = 512;  // even, >= 64
  int object_count = 2;
  CfaPattern pattern = CfaPattern::RGGB;
  int min_size = 64;    // object edge bounds, pixels
  int max_size = 144;
  int margin = 32;      // min distance from frame border
  int background = 96;  // background gray level
  int noise = 6;        // uniform noise amplitude, +/-
};

/// Number of distinct object classes (saturated palette colors).
int palette_size();
/// RGB color of a class.
std::array<uint8_t, 3> palette_color(int class_id);

/// Render object_count non-overlapping rectangles of distinct saturated
/// colors over a noisy gray background, sampled through the CFA pattern.
/// Deterministic per seed. Throws std::runtime_error if placement fails.
SyntheticScene generate_scene(const SceneParams& params);

/// Deterministic scene sequence: the objects of frame 0 drift by at most
/// `motion` pixels per frame inside disjoint cells (never overlapping).
class SceneStream {
 public:
  SceneStream(const SceneParams& params, int motion = 0);

  SyntheticScene frame(int index) const;  // random access
  const SceneParams& params() const { return params_; }
  int motion() const { return motion_; }

 private:
  struct Object {
    int class_id;
    int w, h;
    int x0, y0;          // position at frame 0
    int vx, vy;          // drift per frame
    int xmin, xmax;      // allowed top-left range (its cell)
    int ymin, ymax;
  };
  SceneParams params_;
  int motion_;
  std::vector<Object> objects_;
};

// ---------------------------------------------------------------------------
// Container formats
// ---------------------------------------------------------------------------

/// 16-byte header: magic "ABRW", version u8, pattern u8, width u32le,
/// height u32le, 2 reserved bytes; then width*height raw samples.
void write_raw(const std::string& path, const BayerFrame& frame);
BayerFrame read_raw(const std::string& path);

/// Truth sidecar: one ASCII line per box, `class x y w h`.
void write_truth(const std::string& path,
                 const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> read_truth(const std::string& path);

}  // namespace rawcast
