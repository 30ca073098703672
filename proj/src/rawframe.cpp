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

#include "rawcast/rawframe.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rawcast/rng.hpp"

namespace rawcast {

namespace {

// Channel layout of the 2x2 cell per pattern, raster order of sites.
constexpr int kCellChannels[4][4] = {
    {0, 1, 1, 2},  // RGGB
    {2, 1, 1, 0},  // BGGR
    {1, 0, 2, 1},  // GRBG
    {1, 2, 0, 1},  // GBRG
};

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

const char* cfa_name(CfaPattern p) {
  switch (p) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
  }
  return "?";
}

CfaPattern cfa_from_name(const std::string& name) {
  for (int i = 0; i < 4; ++i) {
    if (name == cfa_name(CfaPattern(i))) return CfaPattern(i);
  }
  throw std::invalid_argument("unknown CFA pattern: " + name);
}

int cfa_channel(CfaPattern p, int x, int y) {
  return kCellChannels[int(p)][(y & 1) * 2 + (x & 1)];
}

BayerFrame::BayerFrame(int w, int h, CfaPattern p, uint8_t fill)
    : width(w), height(h), pattern(p), pixels(size_t(w) * h, fill) {
  if (!valid()) throw std::invalid_argument("invalid Bayer frame dims");
}

bool BayerFrame::valid() const {
  return width > 0 && height > 0 && width % 2 == 0 && height % 2 == 0 &&
         pixels.size() == size_t(width) * height;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix0 = std::max(a.x, b.x);
  const double iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x + a.w, b.x + b.w);
  const double iy1 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix1 - ix0, ih = iy1 - iy0;
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// ---------------------------------------------------------------------------
// Disassembly / reassembly
// ---------------------------------------------------------------------------

PlanarFrame disassemble(const BayerFrame& frame) {
  if (!frame.valid()) throw std::invalid_argument("invalid frame");
  PlanarFrame out;
  out.width = frame.width / 2;
  out.height = frame.height / 2;
  for (auto& plane : out.planes)
    plane.resize(size_t(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const size_t dst = size_t(y) * out.width + x;
      out.planes[0][dst] = frame.at(2 * x, 2 * y);
      out.planes[1][dst] = frame.at(2 * x + 1, 2 * y);
      out.planes[2][dst] = frame.at(2 * x, 2 * y + 1);
      out.planes[3][dst] = frame.at(2 * x + 1, 2 * y + 1);
    }
  }
  return out;
}

BayerFrame reassemble(const PlanarFrame& planar, CfaPattern pattern) {
  for (const auto& plane : planar.planes) {
    if (plane.size() != size_t(planar.width) * planar.height)
      throw std::invalid_argument("inconsistent plane size");
  }
  BayerFrame out(planar.width * 2, planar.height * 2, pattern);
  for (int y = 0; y < planar.height; ++y) {
    for (int x = 0; x < planar.width; ++x) {
      const size_t src = size_t(y) * planar.width + x;
      out.at(2 * x, 2 * y) = planar.planes[0][src];
      out.at(2 * x + 1, 2 * y) = planar.planes[1][src];
      out.at(2 * x, 2 * y + 1) = planar.planes[2][src];
      out.at(2 * x + 1, 2 * y + 1) = planar.planes[3][src];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bilinear demosaic
// ---------------------------------------------------------------------------

RgbFrame demosaic_bilinear(const BayerFrame& frame) {
  if (!frame.valid()) throw std::invalid_argument("invalid frame");
  const int w = frame.width, h = frame.height;
  RgbFrame out(w, h);

  auto raw = [&](int x, int y) -> int {
    return frame.at(clampi(x, 0, w - 1), clampi(y, 0, h - 1));
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int own = cfa_channel(frame.pattern, x, y);
      int rgb[3];
      rgb[own] = frame.at(x, y);
      if (own == 1) {
        // Green site: one missing channel lives on the horizontal
        // neighbors, the other on the vertical ones.
        const int hchan = cfa_channel(frame.pattern, x + 1, y);
        const int vchan = cfa_channel(frame.pattern, x, y + 1);
        rgb[hchan] = (raw(x - 1, y) + raw(x + 1, y) + 1) / 2;
        rgb[vchan] = (raw(x, y - 1) + raw(x, y + 1) + 1) / 2;
      } else {
        // R or B site: green from the 4-neighborhood, the opposite
        // channel from the diagonals.
        rgb[1] = (raw(x - 1, y) + raw(x + 1, y) + raw(x, y - 1) +
                  raw(x, y + 1) + 2) / 4;
        rgb[2 - own] = (raw(x - 1, y - 1) + raw(x + 1, y - 1) +
                        raw(x - 1, y + 1) + raw(x + 1, y + 1) + 2) / 4;
      }
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = uint8_t(clampi(rgb[c], 0, 255));
    }
  }
  return out;
}

BayerFrame scale_luminosity(const BayerFrame& frame, uint32_t num,
                            uint32_t den) {
  if (den == 0 || num == 0 || num > den)
    throw std::invalid_argument("luminosity factor must be in (0, 1]");
  BayerFrame out = frame;
  for (auto& px : out.pixels)
    px = uint8_t(uint64_t(px) * num / den);  // floor, stays within [0,255]
  return out;
}

double tenengrad(std::span<const uint8_t> image, int width, int height) {
  if (width < 3 || height < 3)
    throw std::invalid_argument("tenengrad needs at least 3x3");
  if (image.size() != size_t(width) * height)
    throw std::invalid_argument("buffer size mismatch");
  auto px = [&](int x, int y) -> int { return image[size_t(y) * width + x]; };
  double total = 0;
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      const int gx = -px(x - 1, y - 1) + px(x + 1, y - 1)
                     - 2 * px(x - 1, y) + 2 * px(x + 1, y)
                     - px(x - 1, y + 1) + px(x + 1, y + 1);
      const int gy = -px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1)
                     + px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1);
      total += double(gx) * gx + double(gy) * gy;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

namespace {

constexpr uint8_t kPalette[][3] = {
    {255, 32, 32},   // red
    {32, 255, 32},   // green
    {32, 32, 255},   // blue
    {255, 255, 32},  // yellow
    {255, 32, 255},  // magenta
    {32, 255, 255},  // cyan
};
constexpr int kPaletteSize = int(sizeof(kPalette) / sizeof(kPalette[0]));
constexpr int kObjectGap = 8;  // min clearance between objects

struct Rect {
  int x, y, w, h;
  bool overlaps(const Rect& o, int gap) const {
    return x < o.x + o.w + gap && o.x < x + w + gap &&
           y < o.y + o.h + gap && o.y < y + h + gap;
  }
};

void validate_scene_params(const SceneParams& p) {
  if (p.width < 64 || p.height < 64 || p.width % 2 || p.height % 2)
    throw std::invalid_argument("scene dims must be even and >= 64");
  if (p.object_count < 0)
    throw std::invalid_argument("object_count must be >= 0");
  if (p.object_count > kPaletteSize)
    throw std::runtime_error("cannot place objects with distinct colors: "
                             "object_count exceeds palette");
  if (p.min_size < 4 || p.max_size < p.min_size)
    throw std::invalid_argument("bad object size bounds");
}

// Paints the background (noisy gray) and the object rectangles through the
// CFA pattern. Noise is consumed for every pixel so layouts do not perturb
// the background.
BayerFrame paint(const SceneParams& p, uint64_t noise_seed,
                 const std::vector<Rect>& rects,
                 const std::vector<int>& classes) {
  BayerFrame frame(p.width, p.height, p.pattern);
  Rng noise(noise_seed);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const int n = p.noise > 0 ? int(noise.uniform(-p.noise, p.noise)) : 0;
      frame.at(x, y) = uint8_t(clampi(p.background + n, 0, 255));
    }
  }
  for (size_t i = 0; i < rects.size(); ++i) {
    const auto& r = rects[i];
    const auto color = palette_color(classes[i]);
    for (int y = r.y; y < r.y + r.h; ++y) {
      for (int x = r.x; x < r.x + r.w; ++x) {
        frame.at(x, y) = color[cfa_channel(p.pattern, x, y)];
      }
    }
  }
  return frame;
}

std::vector<BoundingBox> to_truth(const std::vector<Rect>& rects,
                                  const std::vector<int>& classes) {
  std::vector<BoundingBox> truth;
  truth.reserve(rects.size());
  for (size_t i = 0; i < rects.size(); ++i) {
    truth.push_back({classes[i], double(rects[i].x), double(rects[i].y),
                     double(rects[i].w), double(rects[i].h), 1.0});
  }
  return truth;
}

std::vector<int> pick_classes(Rng& rng, int count) {
  // distinct palette indexes, order shuffled by seed
  std::vector<int> ids(kPaletteSize);
  for (int i = 0; i < kPaletteSize; ++i) ids[i] = i;
  for (int i = kPaletteSize - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.uniform(0, i)]);
  ids.resize(count);
  return ids;
}

}  // namespace

int palette_size() { return kPaletteSize; }

std::array<uint8_t, 3> palette_color(int class_id) {
  if (class_id < 0 || class_id >= kPaletteSize)
    throw std::invalid_argument("class_id outside palette");
  return {kPalette[class_id][0], kPalette[class_id][1],
          kPalette[class_id][2]};
}

SyntheticScene generate_scene(const SceneParams& p) {
  validate_scene_params(p);
  Rng rng(Rng::mix(p.seed, 0x5ce0e5));

  std::vector<int> classes = pick_classes(rng, p.object_count);
  std::vector<Rect> rects;
  for (int i = 0; i < p.object_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      const int w = int(rng.uniform(p.min_size, p.max_size));
      const int h = int(rng.uniform(p.min_size, p.max_size));
      if (p.width - p.margin - w < p.margin ||
          p.height - p.margin - h < p.margin)
        continue;
      Rect r{int(rng.uniform(p.margin, p.width - p.margin - w)),
             int(rng.uniform(p.margin, p.height - p.margin - h)), w, h};
      placed = std::none_of(rects.begin(), rects.end(), [&](const Rect& o) {
        return r.overlaps(o, kObjectGap);
      });
      if (placed) rects.push_back(r);
    }
    if (!placed)
      throw std::runtime_error("scene placement failed after retries");
  }

  SyntheticScene scene;
  scene.seed = p.seed;
  scene.frame = paint(p, Rng::mix(p.seed, 0xba5e), rects, classes);
  scene.truth = to_truth(rects, classes);
  return scene;
}

SceneStream::SceneStream(const SceneParams& params, int motion)
    : params_(params), motion_(motion) {
  validate_scene_params(params);
  if (motion < 0) throw std::invalid_argument("motion must be >= 0");
  const int n = params.object_count;
  if (n == 0) return;

  // Assign each object a cell of a coarse layout; drift stays inside the
  // cell so objects can never collide.
  int cols = 1;
  while (cols * cols * params.height < n * params.width) ++cols;
  while (cols > n) --cols;
  const int rows = (n + cols - 1) / cols;
  const int span_w = params.width - 2 * params.margin;
  const int span_h = params.height - 2 * params.margin;
  const int cell_w = span_w / cols;
  const int cell_h = span_h / rows;

  Rng rng(Rng::mix(params.seed, 0x57a7e));
  std::vector<int> classes = pick_classes(rng, n);
  for (int i = 0; i < n; ++i) {
    const int cx = params.margin + (i % cols) * cell_w;
    const int cy = params.margin + (i / cols) * cell_h;
    const int max_w = std::min(params.max_size, cell_w - kObjectGap);
    const int max_h = std::min(params.max_size, cell_h - kObjectGap);
    if (max_w < params.min_size || max_h < params.min_size)
      throw std::runtime_error("scene placement failed: cells too small");
    Object obj;
    obj.class_id = classes[i];
    obj.w = int(rng.uniform(params.min_size, max_w));
    obj.h = int(rng.uniform(params.min_size, max_h));
    obj.xmin = cx;
    obj.xmax = cx + cell_w - kObjectGap - obj.w;
    obj.ymin = cy;
    obj.ymax = cy + cell_h - kObjectGap - obj.h;
    obj.x0 = int(rng.uniform(obj.xmin, obj.xmax));
    obj.y0 = int(rng.uniform(obj.ymin, obj.ymax));
    obj.vx = motion > 0 ? int(rng.uniform(-motion, motion)) : 0;
    obj.vy = motion > 0 ? int(rng.uniform(-motion, motion)) : 0;
    objects_.push_back(obj);
  }
}

namespace {

// Position after t steps of velocity v, reflected inside [lo, hi].
int reflect(int start, int v, int64_t t, int lo, int hi) {
  const int range = hi - lo;
  if (range <= 0) return lo;
  int64_t p = (int64_t(start) - lo + v * t) % (2 * range);
  if (p < 0) p += 2 * range;
  return lo + int(p <= range ? p : 2 * range - p);
}

}  // namespace

SyntheticScene SceneStream::frame(int index) const {
  if (index < 0) throw std::invalid_argument("negative frame index");
  std::vector<Rect> rects;
  std::vector<int> classes;
  for (const auto& obj : objects_) {
    rects.push_back({reflect(obj.x0, obj.vx, index, obj.xmin, obj.xmax),
                     reflect(obj.y0, obj.vy, index, obj.ymin, obj.ymax),
                     obj.w, obj.h});
    classes.push_back(obj.class_id);
  }
  SyntheticScene scene;
  scene.seed = params_.seed;
  scene.frame = paint(params_, Rng::mix(params_.seed, 0xba5e + index),
                      rects, classes);
  scene.truth = to_truth(rects, classes);
  return scene;
}

// ---------------------------------------------------------------------------
// Container formats
// ---------------------------------------------------------------------------

namespace {

constexpr char kRawMagic[4] = {'A', 'B', 'R', 'W'};
constexpr uint8_t kRawVersion = 1;

void put_u32le(std::ostream& os, uint32_t v) {
  const uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                        uint8_t(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
  uint8_t b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

}  // namespace

void write_raw(const std::string& path, const BayerFrame& frame) {
  if (!frame.valid()) throw std::invalid_argument("invalid frame");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kRawMagic, 4);
  os.put(char(kRawVersion));
  os.put(char(frame.pattern));
  put_u32le(os, uint32_t(frame.width));
  put_u32le(os, uint32_t(frame.height));
  os.put(0);
  os.put(0);
  os.write(reinterpret_cast<const char*>(frame.pixels.data()),
           std::streamsize(frame.pixels.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

BayerFrame read_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kRawMagic, 4) != 0)
    throw std::runtime_error("bad RAW magic: " + path);
  const int version = is.get();
  if (version != kRawVersion)
    throw std::runtime_error("unsupported RAW version");
  const int pattern = is.get();
  if (pattern < 0 || pattern > 3) throw std::runtime_error("bad CFA pattern");
  const uint32_t w = get_u32le(is);
  const uint32_t h = get_u32le(is);
  is.ignore(2);
  if (!is || w == 0 || h == 0 || w % 2 || h % 2 || w > (1u << 20) ||
      h > (1u << 20))
    throw std::runtime_error("bad RAW dimensions");
  BayerFrame frame(int(w), int(h), CfaPattern(pattern));
  is.read(reinterpret_cast<char*>(frame.pixels.data()),
          std::streamsize(frame.pixels.size()));
  if (is.gcount() != std::streamsize(frame.pixels.size()))
    throw std::runtime_error("truncated RAW payload: " + path);
  return frame;
}

void write_truth(const std::string& path,
                 const std::vector<BoundingBox>& boxes) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& b : boxes) {
    os << b.class_id << ' ' << b.x << ' ' << b.y << ' ' << b.w << ' ' << b.h
       << '\n';
  }
}

std::vector<BoundingBox> read_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<BoundingBox> boxes;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    BoundingBox b;
    if (!(ls >> b.class_id >> b.x >> b.y >> b.w >> b.h))
      throw std::runtime_error("malformed truth line: " + line);
    b.confidence = 1.0;
    boxes.push_back(b);
  }
  return boxes;
}

}  // namespace rawcast
