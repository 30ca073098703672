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

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "rawcast/eval.hpp"
#include "rawcast/transport.hpp"

namespace fs = std::filesystem;
using namespace rawcast;

namespace {

WeightSet weights_or_default(const std::string& path) {
  return path.empty() ? default_weights() : load_weights(path);
}

std::vector<SyntheticScene> load_corpus(const std::string& dir) {
  std::vector<fs::path> raws;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".raw") raws.push_back(entry.path());
  }
  std::sort(raws.begin(), raws.end());
  if (raws.empty()) throw std::runtime_error("no .raw files in " + dir);
  std::vector<SyntheticScene> corpus;
  for (const auto& raw : raws) {
    SyntheticScene scene;
    scene.frame = read_raw(raw.string());
    fs::path truth = raw;
    truth.replace_extension(".txt");
    if (fs::exists(truth)) scene.truth = read_truth(truth.string());
    corpus.push_back(std::move(scene));
  }
  return corpus;
}

BandwidthTrace scenario_trace(const Scenario& sc) {
  if (!sc.trace_path.empty()) return load_trace(sc.trace_path);
  return BandwidthTrace({{0.0, sc.constant_rate}});
}

Lut scenario_lut(const Scenario& sc, const WeightSet& weights) {
  if (!sc.lut_path.empty()) return Lut::load(sc.lut_path);
  // profile a small corpus on the fly
  SceneParams base = sc.sim.scene;
  const auto corpus = make_corpus(base, 8);
  return profile_offline(corpus, weights, sc.sim.make_grid(), 0.030).lut;
}

void print_summary(const RunSummary& s) {
  std::cout << "frames:        " << s.completed << "\n"
            << "throughput:    " << s.throughput << " fps\n"
            << "mean latency:  " << s.mean_latency * 1000 << " ms\n"
            << "p95 latency:   " << s.p95_latency * 1000 << " ms\n"
            << "mean bytes:    " << s.mean_frame_bytes << " B/frame\n"
            << "max in flight: " << s.max_in_flight << "\n";
  if (s.map50 >= 0)
    std::cout << "mAP@0.5:       " << s.map50 << "\nF1:            " << s.f1
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-wise Bayer RAW offloading toolkit"};
  app.require_subcommand(1);

  // --- trace-gen ---
  auto* trace_gen = app.add_subcommand("trace-gen", "generate a bandwidth trace");
  TraceGenParams tg;
  std::string tg_out;
  trace_gen->add_option("--seed", tg.seed);
  trace_gen->add_option("--duration", tg.duration, "seconds");
  trace_gen->add_option("--mean-rate", tg.mean_rate, "bytes/second");
  trace_gen->add_option("--step-interval", tg.step_interval, "seconds");
  trace_gen->add_option("--step-size", tg.step_size,
                        "bytes/second (default 10% of mean)");
  trace_gen->add_option("--out", tg_out)->required();

  // --- scene-gen ---
  auto* scene_gen = app.add_subcommand("scene-gen", "generate synthetic scenes");
  SceneParams sg;
  std::string sg_out;
  int sg_scenes = 1;
  scene_gen->add_option("--seed", sg.seed);
  scene_gen->add_option("--count", sg.object_count, "objects per scene");
  scene_gen->add_option("--width", sg.width);
  scene_gen->add_option("--height", sg.height);
  scene_gen->add_option("--scenes", sg_scenes, "number of scenes");
  scene_gen->add_option("--out", sg_out, "output directory")->required();

  // --- weights-export ---
  auto* wexp = app.add_subcommand("weights-export", "write the default weights");
  std::string wexp_out;
  wexp->add_option("--out", wexp_out)->required();

  // --- profile ---
  auto* profile = app.add_subcommand("profile", "offline accuracy/size profile");
  std::string pf_corpus, pf_weights, pf_out_lut, pf_out_csv, pf_out_svg;
  double pf_thr_ms = 30.0;
  int pf_rows = 4, pf_cols = 3, pf_overlap = 32;
  profile->add_option("--corpus", pf_corpus, "directory of .raw/.txt scenes")
      ->required();
  profile->add_option("--weights", pf_weights);
  profile->add_option("--out-lut", pf_out_lut)->required();
  profile->add_option("--out-csv", pf_out_csv)->required();
  profile->add_option("--out-svg", pf_out_svg, "Pareto plot");
  profile->add_option("--tx-threshold-ms", pf_thr_ms);
  profile->add_option("--rows", pf_rows);
  profile->add_option("--cols", pf_cols);
  profile->add_option("--overlap", pf_overlap);

  // --- simulate ---
  auto* simulate = app.add_subcommand("simulate", "virtual-clock end-to-end run");
  std::string sm_scenario, sm_trace, sm_out, sm_out_det, sm_out_truth,
      sm_out_svg;
  simulate->add_option("--scenario", sm_scenario)->required();
  simulate->add_option("--trace", sm_trace, "overrides the scenario trace");
  simulate->add_option("--out", sm_out, "per-frame CSV")->required();
  simulate->add_option("--out-detections", sm_out_det);
  simulate->add_option("--out-truth", sm_out_truth);
  simulate->add_option("--out-svg", sm_out_svg, "latency plot");

  // --- ablate ---
  auto* ablate = app.add_subcommand("ablate", "tile-selection ablation run");
  std::string ab_scenario, ab_mode = "default", ab_out;
  ablate->add_option("--scenario", ab_scenario)->required();
  ablate->add_option("--mode", ab_mode)
      ->check(CLI::IsMember({"alltiles", "default"}));
  ablate->add_option("--out", ab_out, "per-frame CSV")->required();

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "score detections against truth");
  std::string ev_det, ev_truth, ev_out;
  double ev_iou = 0.5, ev_conf = 0.25;
  eval_cmd->add_option("--detections", ev_det)->required();
  eval_cmd->add_option("--truth", ev_truth)->required();
  eval_cmd->add_option("--out", ev_out)->required();
  eval_cmd->add_option("--iou", ev_iou);
  eval_cmd->add_option("--conf", ev_conf);

  // --- serve / stream (wall-clock demo) ---
  auto* serve = app.add_subcommand("serve", "wall-clock edge server");
  uint16_t sv_port = 9901;
  std::string sv_weights, sv_scenario;
  serve->add_option("--port", sv_port);
  serve->add_option("--weights", sv_weights);
  serve->add_option("--scenario", sv_scenario, "frame geometry source")
      ->required();

  auto* stream = app.add_subcommand("stream", "wall-clock client");
  std::string st_host = "127.0.0.1", st_scenario, st_out;
  uint16_t st_port = 9901;
  stream->add_option("--host", st_host);
  stream->add_option("--port", st_port);
  stream->add_option("--scenario", st_scenario)->required();
  stream->add_option("--out", st_out, "per-frame CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*trace_gen) {
      save_trace(tg_out, generate_trace(tg));
      std::cout << "wrote " << tg_out << "\n";
    } else if (*scene_gen) {
      fs::create_directories(sg_out);
      for (int i = 0; i < sg_scenes; ++i) {
        SceneParams p = sg;
        p.seed = sg.seed + uint64_t(i) * 7919;
        const SyntheticScene scene = generate_scene(p);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04d", i);
        write_raw((fs::path(sg_out) / (std::string(name) + ".raw")).string(),
                  scene.frame);
        write_truth((fs::path(sg_out) / (std::string(name) + ".txt")).string(),
                    scene.truth);
      }
      std::cout << "wrote " << sg_scenes << " scenes to " << sg_out << "\n";
    } else if (*wexp) {
      save_weights(wexp_out, default_weights());
      std::cout << "wrote " << wexp_out << "\n";
    } else if (*profile) {
      const auto corpus = load_corpus(pf_corpus);
      const auto& f = corpus.front().frame;
      const TileGrid grid(pf_rows, pf_cols, pf_overlap, f.width, f.height);
      const ProfileResult result =
          profile_offline(corpus, weights_or_default(pf_weights), grid,
                          pf_thr_ms / 1000.0);
      result.lut.save(pf_out_lut);
      write_profile_csv(pf_out_csv, result.rows);
      if (!pf_out_svg.empty()) {
        std::vector<std::pair<double, double>> pareto;
        for (const auto& row : result.rows)
          pareto.push_back({row.mean_frame_bytes, row.map50});
        std::sort(pareto.begin(), pareto.end());
        write_svg_plot(pf_out_svg, "accuracy vs frame size", "bytes/frame",
                       "mAP@0.5", pareto);
      }
      for (const auto& row : result.rows) {
        std::cout << "config " << row.config_id << ": mAP " << row.map50
                  << ", F1 " << row.f1 << ", tile " << row.mean_tile_bytes
                  << " B, frame " << row.mean_frame_bytes << " B\n";
      }
    } else if (*simulate || *ablate) {
      const bool ablating = bool(*ablate);
      Scenario sc = load_scenario(ablating ? ab_scenario : sm_scenario);
      if (ablating) sc.sim.all_tiles = ab_mode == "alltiles";
      if (!ablating && !sm_trace.empty()) sc.trace_path = sm_trace;
      const WeightSet weights = weights_or_default(sc.weights_path);
      const BandwidthTrace trace = scenario_trace(sc);
      const Lut lut = scenario_lut(sc, weights);
      const ExperimentReport report =
          run_experiment(sc, lut, weights, trace);
      write_frame_csv(ablating ? ab_out : sm_out, report.frames);
      if (!ablating) {
        if (!sm_out_det.empty() || !sm_out_truth.empty()) {
          const SimulationResult sim = run_simulation(
              sc.sim, lut, weights, trace, make_detector());
          if (!sm_out_det.empty()) write_detections(sm_out_det, sim.detections);
          if (!sm_out_truth.empty()) write_detections(sm_out_truth, sim.truths);
        }
        if (!sm_out_svg.empty()) {
          std::vector<std::pair<double, double>> lat;
          for (const auto& f : report.frames)
            lat.push_back({double(f.frame_id), f.e2e_latency * 1000});
          write_svg_plot(sm_out_svg, "per-frame latency", "frame",
                         "e2e ms", lat);
        }
      }
      print_summary(report.summary);
    } else if (*eval_cmd) {
      const auto dets = read_detections(ev_det);
      auto truths = read_detections(ev_truth);
      truths.resize(std::max(truths.size(), dets.size()));
      auto padded = dets;
      padded.resize(truths.size());
      const ApResult r = evaluate(padded, truths, ev_iou, ev_conf);
      std::ofstream os(ev_out);
      os << "map50,precision,recall,f1\n"
         << r.map50 << ',' << r.precision << ',' << r.recall << ',' << r.f1
         << '\n';
      std::cout << "mAP@0.5 " << r.map50 << ", P " << r.precision << ", R "
                << r.recall << ", F1 " << r.f1 << "\n";
    } else if (*serve) {
      const Scenario sc = load_scenario(sv_scenario);
      ServerContext ctx{weights_or_default(
                            sv_weights.empty() ? sc.weights_path : sv_weights),
                        sc.sim.make_grid(), sc.sim.scene.pattern,
                        sc.sim.fill_value, make_detector()};
      TcpListener listener(sv_port);
      std::cout << "listening on 127.0.0.1:" << listener.port() << "\n";
      TcpStream conn = listener.accept();
      const int served = serve_connection(conn, ctx);
      std::cout << "served " << served << " frames\n";
    } else if (*stream) {
      const Scenario sc = load_scenario(st_scenario);
      const WeightSet weights = weights_or_default(sc.weights_path);
      const Lut lut = scenario_lut(sc, weights);
      const TileGrid grid = sc.sim.make_grid();
      SceneStream scenes(sc.sim.scene, sc.sim.motion);
      Controller controller(lut, grid, sc.sim.controller);
      TcpStream conn = TcpStream::connect(st_host, st_port);
      WallClientOptions opts;
      opts.frames = sc.sim.frames;
      opts.frame_interval = sc.sim.stages.capture;
      const auto metrics =
          run_wall_client(conn, scenes, controller, weights, grid, opts);
      if (!st_out.empty()) write_frame_csv(st_out, metrics);
      int done = 0;
      double mean = 0;
      for (const auto& m : metrics) {
        if (!m.dropped) {
          ++done;
          mean += m.e2e_latency;
        }
      }
      std::cout << "completed " << done << "/" << metrics.size() << " frames";
      if (done) std::cout << ", mean e2e " << mean / done * 1000 << " ms";
      std::cout << "\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
