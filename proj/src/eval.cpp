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

#include "rawcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rawcast {

// ---------------------------------------------------------------------------
// Reference detector
// ---------------------------------------------------------------------------

std::vector<BoundingBox> detect(const RgbFrame& frame,
                                const DetectorParams& params) {
  const int w = frame.width, h = frame.height;
  const int classes = palette_size();

  // classify pixels: label = class + 1, 0 = background
  std::vector<int16_t> label(size_t(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int r = frame.at(x, y, 0), g = frame.at(x, y, 1),
                b = frame.at(x, y, 2);
      int best = -1;
      double best_dist = params.color_threshold;
      for (int c = 0; c < classes; ++c) {
        const auto color = palette_color(c);
        const double dist = std::abs(r - int(color[0])) +
                            std::abs(g - int(color[1])) +
                            std::abs(b - int(color[2]));
        if (dist <= best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      if (best >= 0) label[size_t(y) * w + x] = int16_t(best + 1);
    }
  }

  // 4-connected components per class
  std::vector<BoundingBox> out;
  std::vector<int32_t> stack;
  std::vector<bool> seen(size_t(w) * h, false);
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const size_t start = size_t(y0) * w + x0;
      if (label[start] == 0 || seen[start]) continue;
      const int16_t cls = label[start];
      int min_x = x0, max_x = x0, min_y = y0, max_y = y0;
      int64_t count = 0;
      seen[start] = true;
      stack.push_back(int32_t(start));
      while (!stack.empty()) {
        const int32_t at = stack.back();
        stack.pop_back();
        const int x = at % w, y = int(at / w);
        ++count;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const size_t ni = size_t(ny[k]) * w + nx[k];
          if (!seen[ni] && label[ni] == cls) {
            seen[ni] = true;
            stack.push_back(int32_t(ni));
          }
        }
      }
      if (count < params.min_area) continue;
      BoundingBox box;
      box.class_id = cls - 1;
      box.x = min_x;
      box.y = min_y;
      box.w = max_x - min_x + 1;
      box.h = max_y - min_y + 1;
      box.confidence = double(count) / (box.w * box.h);
      out.push_back(box);
    }
  }
  return out;
}

std::vector<BoundingBox> detect_bayer(const BayerFrame& frame,
                                      const DetectorParams& params) {
  return detect(demosaic_bilinear(frame), params);
}

Detector make_detector(const DetectorParams& params) {
  return [params](const BayerFrame& frame) {
    return detect_bayer(frame, params);
  };
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace {

struct RankedDet {
  double confidence;
  int frame;
  int index;  // within its frame, for a stable ranking
  BoundingBox box;
};

double all_points_ap(std::vector<PrPoint> points) {
  // precision envelope from the right, then rectangle integration
  std::sort(points.begin(), points.end(),
            [](const PrPoint& a, const PrPoint& b) {
              return a.recall < b.recall ||
                     (a.recall == b.recall && a.precision > b.precision);
            });
  double ap = 0, prev_recall = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    double env = 0;
    for (size_t j = i; j < points.size(); ++j)
      env = std::max(env, points[j].precision);
    ap += (points[i].recall - prev_recall) * env;
    prev_recall = points[i].recall;
  }
  return ap;
}

}  // namespace

ApResult evaluate(const std::vector<std::vector<BoundingBox>>& detections,
                  const std::vector<std::vector<BoundingBox>>& truths,
                  double iou_threshold, double conf_threshold) {
  if (detections.size() != truths.size())
    throw std::invalid_argument("frame counts differ");
  const int frames = int(truths.size());

  std::map<int, int> truth_count;  // class -> total truths
  for (const auto& frame : truths)
    for (const auto& t : frame) truth_count[t.class_id]++;

  ApResult result;
  int64_t tp_op = 0, fp_op = 0;  // micro counts at the operating threshold
  int64_t truth_total = 0;
  for (const auto& [cls, cnt] : truth_count) truth_total += cnt;

  std::map<int, std::vector<RankedDet>> by_class;
  for (int f = 0; f < frames; ++f) {
    for (size_t i = 0; i < detections[size_t(f)].size(); ++i) {
      const auto& d = detections[size_t(f)][i];
      by_class[d.class_id].push_back({d.confidence, f, int(i), d});
    }
  }

  // per class: rank, greedy-match, integrate
  std::vector<PrPoint> pooled;
  for (auto& [cls, dets] : by_class) {
    std::sort(dets.begin(), dets.end(),
              [](const RankedDet& a, const RankedDet& b) {
                if (a.confidence != b.confidence)
                  return a.confidence > b.confidence;
                if (a.frame != b.frame) return a.frame < b.frame;
                return a.index < b.index;
              });
    std::vector<std::vector<bool>> taken(size_t(frames));
    for (int f = 0; f < frames; ++f)
      taken[size_t(f)].assign(truths[size_t(f)].size(), false);

    const int64_t n_truth =
        truth_count.count(cls) ? truth_count.at(cls) : 0;
    int64_t tp = 0, fp = 0;
    std::vector<PrPoint> points;
    for (const auto& det : dets) {
      int best = -1;
      double best_iou = iou_threshold;
      const auto& frame_truths = truths[size_t(det.frame)];
      for (size_t t = 0; t < frame_truths.size(); ++t) {
        if (frame_truths[t].class_id != cls || taken[size_t(det.frame)][t])
          continue;
        const double overlap = iou(det.box, frame_truths[t]);
        if (overlap >= best_iou) {
          best_iou = overlap;
          best = int(t);
        }
      }
      const bool is_tp = best >= 0;
      if (is_tp) {
        taken[size_t(det.frame)][size_t(best)] = true;
        ++tp;
      } else {
        ++fp;
      }
      if (det.confidence >= conf_threshold) {
        if (is_tp) ++tp_op; else ++fp_op;
      }
      if (n_truth > 0) {
        points.push_back({double(tp) / double(n_truth),
                          double(tp) / double(tp + fp)});
        pooled.push_back(points.back());
      }
    }
    if (n_truth > 0) {
      result.classes.push_back(cls);
      result.per_class_ap.push_back(all_points_ap(points));
    }
  }
  // classes with truths but no detections at all
  for (const auto& [cls, cnt] : truth_count) {
    if (!by_class.count(cls)) {
      result.classes.push_back(cls);
      result.per_class_ap.push_back(0.0);
    }
  }

  result.map50 =
      result.per_class_ap.empty()
          ? 0.0
          : std::accumulate(result.per_class_ap.begin(),
                            result.per_class_ap.end(), 0.0) /
                double(result.per_class_ap.size());
  result.precision =
      tp_op + fp_op > 0 ? double(tp_op) / double(tp_op + fp_op) : 0.0;
  result.recall = truth_total > 0 ? double(tp_op) / double(truth_total) : 0.0;
  result.f1 = result.precision + result.recall > 0
                  ? 2 * result.precision * result.recall /
                        (result.precision + result.recall)
                  : 0.0;
  result.curve = std::move(pooled);
  return result;
}

// ---------------------------------------------------------------------------
// Offline profiling
// ---------------------------------------------------------------------------

std::vector<SyntheticScene> make_corpus(const SceneParams& base, int scenes) {
  std::vector<SyntheticScene> corpus;
  corpus.reserve(size_t(scenes));
  for (int i = 0; i < scenes; ++i) {
    SceneParams p = base;
    p.seed = base.seed + uint64_t(i) * 7919;
    corpus.push_back(generate_scene(p));
  }
  return corpus;
}

ProfileResult profile_offline(std::span<const SyntheticScene> corpus,
                              const WeightSet& weights, const TileGrid& grid,
                              double tx_threshold,
                              const DetectorParams& params) {
  if (corpus.empty()) throw std::invalid_argument("empty profiling corpus");

  std::vector<ProfileRow> rows;
  std::vector<ProfileMeasurement> measurements;
  for (const auto& cfg : CodecConfig::all()) {
    double tile_bytes = 0, frame_bytes = 0, raw_bytes = 0, mse_sum = 0;
    int64_t tiles_seen = 0;
    std::vector<std::vector<BoundingBox>> dets, truths;

    TransmissionPlan plan;
    plan.config = cfg;
    plan.is_key_frame = true;
    plan.tiles.resize(size_t(grid.count()));
    for (int t = 0; t < grid.count(); ++t) plan.tiles[size_t(t)] = t;

    for (size_t s = 0; s < corpus.size(); ++s) {
      const auto& scene = corpus[s];
      const FrameMessage msg = build_frame_message(
          uint64_t(s), scene.frame, plan, weights, grid);
      frame_bytes += double(serialize_message(msg).size());
      for (const auto& tile : msg.tiles) {
        tile_bytes += double(tile.payload.size());
        raw_bytes += double(tile.raw_len);
        ++tiles_seen;
      }
      std::vector<std::pair<int, BayerFrame>> decoded;
      for (const auto& tile : msg.tiles) {
        const TileRect r = grid.tile_rect(tile.tile_index);
        decoded.emplace_back(tile.tile_index,
                             decode_tile_full(tile, weights, r.w, r.h,
                                              scene.frame.pattern));
      }
      const BayerFrame canvas =
          assemble_canvas(decoded, grid, scene.frame.pattern);
      mse_sum += mse(canvas, scene.frame);
      dets.push_back(detect_bayer(canvas, params));
      truths.push_back(scene.truth);
    }

    const ApResult acc = evaluate(dets, truths);
    ProfileRow row;
    row.config_id = cfg.id;
    row.map50 = acc.map50;
    row.f1 = acc.f1;
    row.mean_tile_bytes = tile_bytes / double(tiles_seen);
    row.mean_frame_bytes = frame_bytes / double(corpus.size());
    row.mean_raw_len = raw_bytes / double(tiles_seen);
    row.mean_mse = mse_sum / double(corpus.size());
    rows.push_back(row);
    measurements.push_back({cfg.id, row.map50, row.mean_tile_bytes});
  }
  return {rows, build_lut(measurements, tx_threshold)};
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const Scenario& scenario, const Lut& lut,
                                const WeightSet& weights,
                                const BandwidthTrace& trace,
                                const DetectorParams& params) {
  const SimulationResult sim = run_simulation(scenario.sim, lut, weights,
                                              trace, make_detector(params));
  ExperimentReport report;
  report.frames = sim.frames;
  report.accuracy = evaluate(sim.detections, sim.truths);
  report.summary = sim.summary;
  report.summary.map50 = report.accuracy.map50;
  report.summary.f1 = report.accuracy.f1;
  return report;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  return os;
}

}  // namespace

void write_frame_csv(const std::string& path,
                     const std::vector<FrameMetrics>& frames) {
  auto os = open_out(path);
  os << "frame_id,e2e_latency_ms,bytes,tiles,config,key_frame,dropped\n";
  for (const auto& f : frames) {
    os << f.frame_id << ',' << f.e2e_latency * 1000.0 << ','
       << f.transmitted_bytes << ',' << f.tiles_sent << ',' << f.config_used
       << ',' << (f.key_frame ? 1 : 0) << ',' << (f.dropped ? 1 : 0) << '\n';
  }
}

void write_profile_csv(const std::string& path,
                       const std::vector<ProfileRow>& rows) {
  auto os = open_out(path);
  os << "config_id,map50,f1,mean_tile_bytes,mean_frame_bytes,mean_raw_len,"
        "mean_mse\n";
  for (const auto& r : rows) {
    os << r.config_id << ',' << r.map50 << ',' << r.f1 << ','
       << r.mean_tile_bytes << ',' << r.mean_frame_bytes << ','
       << r.mean_raw_len << ',' << r.mean_mse << '\n';
  }
}

void write_summary_csv(const std::string& path, const RunSummary& s) {
  auto os = open_out(path);
  os << "completed,duration_s,throughput_fps,mean_latency_ms,p95_latency_ms,"
        "mean_frame_bytes,max_in_flight,map50,f1\n";
  os << s.completed << ',' << s.duration << ',' << s.throughput << ','
     << s.mean_latency * 1000.0 << ',' << s.p95_latency * 1000.0 << ','
     << s.mean_frame_bytes << ',' << s.max_in_flight << ',' << s.map50 << ','
     << s.f1 << '\n';
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<std::pair<double, double>>& series) {
  if (series.empty()) throw std::invalid_argument("empty plot series");
  const int width = 640, height = 400, pad = 56;
  double min_x = series[0].first, max_x = min_x;
  double min_y = series[0].second, max_y = min_y;
  for (const auto& [x, y] : series) {
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
  if (max_x == min_x) max_x = min_x + 1;
  if (max_y == min_y) max_y = min_y + 1;
  auto sx = [&](double x) {
    return pad + (x - min_x) / (max_x - min_x) * (width - 2 * pad);
  };
  auto sy = [&](double y) {
    return height - pad - (y - min_y) / (max_y - min_y) * (height - 2 * pad);
  };

  auto os = open_out(path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
     << "' height='" << height << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << width / 2 << "' y='20' text-anchor='middle'>" << title
     << "</text>\n"
     << "<text x='" << width / 2 << "' y='" << height - 8
     << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n"
     << "<text x='14' y='" << height / 2
     << "' text-anchor='middle' font-size='12' transform='rotate(-90 14 "
     << height / 2 << ")'>" << y_label << "</text>\n"
     << "<line x1='" << pad << "' y1='" << height - pad << "' x2='"
     << width - pad << "' y2='" << height - pad << "' stroke='black'/>\n"
     << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='"
     << height - pad << "' stroke='black'/>\n";
  os << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
  for (const auto& [x, y] : series) os << sx(x) << ',' << sy(y) << ' ';
  os << "'/>\n";
  for (const auto& [x, y] : series) {
    os << "<circle cx='" << sx(x) << "' cy='" << sy(y)
       << "' r='2.5' fill='steelblue'/>\n";
  }
  os << "<text x='" << pad << "' y='" << height - pad + 16
     << "' font-size='10'>" << min_x << "</text>\n"
     << "<text x='" << width - pad << "' y='" << height - pad + 16
     << "' text-anchor='end' font-size='10'>" << max_x << "</text>\n"
     << "<text x='" << pad - 4 << "' y='" << height - pad
     << "' text-anchor='end' font-size='10'>" << min_y << "</text>\n"
     << "<text x='" << pad - 4 << "' y='" << pad
     << "' text-anchor='end' font-size='10'>" << max_y << "</text>\n";
  os << "</svg>\n";
}

void write_detections(const std::string& path,
                      const std::vector<std::vector<BoundingBox>>& per_frame) {
  auto os = open_out(path);
  os << "# frame_id class confidence x y w h\n";
  for (size_t f = 0; f < per_frame.size(); ++f) {
    for (const auto& d : per_frame[f]) {
      os << f << ' ' << d.class_id << ' ' << d.confidence << ' ' << d.x << ' '
         << d.y << ' ' << d.w << ' ' << d.h << '\n';
    }
  }
}

std::vector<std::vector<BoundingBox>> read_detections(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<BoundingBox>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    size_t frame;
    BoundingBox b;
    if (!(ls >> frame >> b.class_id >> b.confidence >> b.x >> b.y >> b.w >>
          b.h))
      throw std::runtime_error("malformed detection line: " + line);
    if (frame >= out.size()) out.resize(frame + 1);
    out[frame].push_back(b);
  }
  return out;
}

}  // namespace rawcast
