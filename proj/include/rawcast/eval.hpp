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

#include <string>
#include <vector>

#include "rawcast/controller.hpp"
#include "rawcast/pipeline.hpp"
#include "rawcast/rawframe.hpp"

namespace rawcast {

// ---------------------------------------------------------------------------
// Reference detector (color-blob segmentation)
// ---------------------------------------------------------------------------

struct DetectorParams {
  double color_threshold = 140;  // max L1 distance to a palette color
  int min_area = 64;             // pixels per component
};

/// Deterministic downstream task: classify pixels to the nearest palette
/// color within the threshold, take 4-connected components, box their
/// extents. Confidence is the in-threshold fraction inside the box.
std::vector<BoundingBox> detect(const RgbFrame& frame,
                                const DetectorParams& params = {});

/// Detector over a Bayer canvas: demosaic then detect.
std::vector<BoundingBox> detect_bayer(const BayerFrame& frame,
                                      const DetectorParams& params = {});

/// Adapter for the pipeline's server hook.
Detector make_detector(const DetectorParams& params = {});

// ---------------------------------------------------------------------------
// Detection metrics (single IoU threshold, all-points AP)
// ---------------------------------------------------------------------------

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

struct ApResult {
  double map50 = 0;  // mean AP over classes present in the truth
  double precision = 0, recall = 0, f1 = 0;  // at the operating threshold
  std::vector<int> classes;                  // classes present in truth
  std::vector<double> per_class_ap;          // aligned with `classes`
  std::vector<PrPoint> curve;                // pooled PR sweep (diagnostic)
};

/// VOC-style evaluation: per class, detections ranked by confidence greedily
/// match untaken truths at IoU >= iou_threshold; AP by all-points
/// integration. Precision/recall/F1 are micro-averaged at conf >=
/// conf_threshold.
ApResult evaluate(const std::vector<std::vector<BoundingBox>>& detections,
                  const std::vector<std::vector<BoundingBox>>& truths,
                  double iou_threshold = 0.5, double conf_threshold = 0.25);

// ---------------------------------------------------------------------------
// Offline profiling
// ---------------------------------------------------------------------------

struct ProfileRow {
  int config_id = 0;
  double map50 = 0;
  double f1 = 0;
  double mean_tile_bytes = 0;   // compressed payload per tile
  double mean_frame_bytes = 0;  // serialized message per frame
  double mean_raw_len = 0;      // pre-entropy bytes per tile
  double mean_mse = 0;          // reconstruction vs original frame
};

struct ProfileResult {
  std::vector<ProfileRow> rows;  // one per config, id order
  Lut lut;
};

/// Round-trip the corpus through every configuration (all tiles), measure
/// accuracy and sizes, and build the controller LUT.
ProfileResult profile_offline(std::span<const SyntheticScene> corpus,
                              const WeightSet& weights, const TileGrid& grid,
                              double tx_threshold,
                              const DetectorParams& params = {});

/// Deterministic profiling corpus.
std::vector<SyntheticScene> make_corpus(const SceneParams& base, int scenes);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentReport {
  RunSummary summary;
  std::vector<FrameMetrics> frames;
  ApResult accuracy;
};

/// Drive the simulator over a scenario and score the returned detections.
ExperimentReport run_experiment(const Scenario& scenario, const Lut& lut,
                                const WeightSet& weights,
                                const BandwidthTrace& trace,
                                const DetectorParams& params = {});

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Header: frame_id,e2e_latency_ms,bytes,tiles,config,key_frame,dropped
void write_frame_csv(const std::string& path,
                     const std::vector<FrameMetrics>& frames);
/// Header: config_id,map50,f1,mean_tile_bytes,mean_frame_bytes,mean_raw_len,mean_mse
void write_profile_csv(const std::string& path,
                       const std::vector<ProfileRow>& rows);
/// Header: completed,duration_s,throughput_fps,mean_latency_ms,p95_latency_ms,mean_frame_bytes,max_in_flight,map50,f1
void write_summary_csv(const std::string& path, const RunSummary& summary);

/// Minimal SVG line plot of (x, y) series.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<std::pair<double, double>>& series);

/// Detection dump/restore: `frame_id class confidence x y w h` per line.
void write_detections(const std::string& path,
                      const std::vector<std::vector<BoundingBox>>& per_frame);
std::vector<std::vector<BoundingBox>> read_detections(const std::string& path);

}  // namespace rawcast
