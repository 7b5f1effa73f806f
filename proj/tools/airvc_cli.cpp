// airvc: simulate scenes, calibrate a counting line and ROI, count vehicles.
//
//   airvc simulate scene.json out/
//   airvc estimate out/detections.jsonl --out calib.json --heatmap
//   airvc count segment.jsonl calib.json --events events.csv
//   airvc run out/detections.jsonl --gt out/gt.json --bench --curve 16
//
// Exit codes: 0 success, 2 invalid input or configuration, 1 anything else.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "airvc/airvc.hpp"
#include "airvc/report.hpp"

namespace fs = std::filesystem;
using namespace airvc;
using Json = nlohmann::ordered_json;

namespace {

struct InputOptions {
  std::string format = "jsonl";
  int width = 0;
  int height = 0;
  std::optional<double> fps;
};

struct EstimateOptions {
  double alpha = 1.5;
  double tau = 0.8;
  int max_order = 6;
  bool equal_weight = true;
};

void add_input_flags(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--format", in.format, "Detection file format")->check(CLI::IsMember({"jsonl", "mot"}));
  cmd->add_option("--width", in.width, "Frame width (required for mot)");
  cmd->add_option("--height", in.height, "Frame height (required for mot)");
  cmd->add_option("--fps", in.fps, "Frame rate (mot only)");
}

void add_estimate_flags(CLI::App* cmd, EstimateOptions& e) {
  cmd->add_option("--alpha", e.alpha, "ROI extent as a multiple of the average box extent")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau", e.tau, "HDDR threshold as a fraction of the density peak")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--max-order", e.max_order, "Highest polynomial order tried")->check(CLI::Range(1, 12));
  cmd->add_option("--equal-weight", e.equal_weight, "Halve tracking scores so both score terms span [0,1]");
}

EstimationConfig to_config(const EstimateOptions& e) {
  EstimationConfig c;
  c.alpha = e.alpha;
  c.tau = e.tau;
  c.max_order = e.max_order;
  c.equal_weight = e.equal_weight;
  return c;
}

SequenceDataset load(const std::string& path, const InputOptions& in) {
  IngestReport r;
  if (in.format == "mot") {
    r = read_mot_csv(path, {in.width, in.height, in.fps});
  } else {
    r = read_jsonl(path);
    if (in.width > 0 || in.height > 0) {
      if (in.width != r.dataset.geometry.width || in.height != r.dataset.geometry.height)
        throw ConfigError("--width/--height disagree with the header of '" + path + "'");
    }
  }
  if (r.rejected || r.dropped_outside)
    std::cerr << path << ": " << r.rejected << " records rejected, " << r.dropped_outside
              << " boxes outside the frame dropped\n";
  return std::move(r.dataset);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << text;
}

void emit_json(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

template <class Fn>
std::string render(Fn fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

void write_heatmap(const fs::path& stem, const DensityProfile& d, const CountingLine& cl_o) {
  write_text(stem.string() + ".heatmap.csv", render([&](auto& os) { report::write_density_csv(os, d); }));
  write_text(stem.string() + ".heatmap.svg",
             render([&](auto& os) { report::write_svg(os, report::density_plot(d, cl_o)); }));
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// simulate

int cmd_simulate(const std::string& scene_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  auto spec = sim::read_scene(scene_path);
  if (seed) spec.seed = *seed;
  const auto scene = sim::generate(spec);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_jsonl((dir / "detections.jsonl").string(), scene.dataset);
  write_text(dir / "gt.json", sim::to_json(scene.truth).dump(2) + "\n");
  std::cerr << "simulated " << scene.dataset.frames.size() << " frames, " << scene.dataset.detection_count()
            << " detections, " << scene.truth.total() << " vehicles\n";
  return 0;
}

// estimate

int cmd_estimate(const std::string& dets, const InputOptions& in, const EstimateOptions& e, const std::string& out,
                 bool heatmap, const std::string& out_dir) {
  const auto ds = load(dets, in);
  EstimationTrace trace;
  const auto est = run_estimation(ds, to_config(e), &trace);
  emit_json(to_json(est), out);
  if (heatmap) write_heatmap(fs::path(out_dir) / fs::path(dets).stem(), trace.density, est.cl_o);
  return 0;
}

// count

struct CountOptions {
  std::string events;
  std::optional<std::int64_t> gt_count;
  std::string gt_path;
  std::string out;
  bool no_timing = false;
};

int cmd_count(const std::string& dets, const std::string& calib_path, const InputOptions& in,
              const CountOptions& c) {
  const auto ds = load(dets, in);
  std::ifstream is(calib_path);
  if (!is) throw ConfigError("cannot open calibration file '" + calib_path + "'");
  nlohmann::json cj;
  try {
    cj = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& err) {
    throw FormatError(std::string("calibration file is not valid JSON: ") + err.what());
  }
  const auto est = estimation_from_json(cj);
  const auto result = run_prediction(ds, est);

  std::optional<std::int64_t> truth = c.gt_count;
  if (!truth && !c.gt_path.empty()) truth = sim::crossings_in(sim::read_ground_truth(c.gt_path), est.cl_o.position, ds);
  if (!truth) truth = ds.gt_count;

  Json j;
  j["input"] = dets;
  j["calibration"] = calib_path;
  j["cl_o"] = est.cl_o.position;
  j["thr_o"] = est.thr_o;
  j["result"] = to_json(result, !c.no_timing);
  j["ground_truth"] = truth ? Json(*truth) : Json(nullptr);
  j["accuracy"] = truth && *truth > 0 ? Json(counting_accuracy(result.count, *truth)) : Json(nullptr);
  emit_json(j, c.out);
  if (!c.events.empty()) write_text(c.events, render([&](auto& os) { write_events_csv(os, result); }));
  return 0;
}

// run

struct RunOptions {
  double split = 0.7;
  bool bench = false;
  int repeats = 5;
  int curve = 0;
  bool heatmap = false;
  std::vector<std::string> gt;
  std::string out_dir;
  bool no_timing = false;
  int jobs = 1;
};

Json run_one(const std::string& dets, const std::string& gt_path, const InputOptions& in, const EstimateOptions& e,
             const RunOptions& r) {
  const auto ds = load(dets, in);
  const auto [est_seg, pred_seg] = split(ds, {r.split});
  EstimationTrace trace;
  const auto est = run_estimation(est_seg, to_config(e), &trace);
  const auto result = run_prediction(pred_seg, est);

  std::optional<sim::GroundTruth> gt;
  if (!gt_path.empty()) gt = sim::read_ground_truth(gt_path);
  std::optional<std::int64_t> truth;
  if (gt) truth = sim::crossings_in(*gt, est.cl_o.position, pred_seg);
  std::optional<double> accuracy;
  if (truth && *truth > 0) accuracy = counting_accuracy(result.count, *truth);

  Json j;
  j["input"] = dets;
  j["split"] = {{"fraction", r.split},
                {"frames_total", ds.frames.size()},
                {"frames_estimation", est_seg.frames.size()},
                {"frames_prediction", pred_seg.frames.size()}};
  j["calibration"] = to_json(est);
  j["result"] = to_json(result, !r.no_timing);
  j["ground_truth"] = truth ? Json(*truth) : Json(nullptr);
  j["accuracy"] = optional_number(accuracy);

  if (r.bench) {
    const auto speed = benchmark_speed(pred_seg, est, r.repeats);
    j["speed"] = to_json(speed);
    j["table_row"] = {{"sequence", fs::path(dets).stem().string()},
                      {"fps_frame", speed.fps_frame},
                      {"fps_roi", speed.fps_roi},
                      {"speed_improvement", speed.improvement},
                      {"accuracy", optional_number(accuracy)}};
  }

  const fs::path stem = fs::path(r.out_dir.empty() ? "." : r.out_dir) / fs::path(dets).stem();
  if (r.heatmap) write_heatmap(stem, trace.density, est.cl_o);
  if (r.curve > 0) {
    if (!gt) throw ConfigError("--curve needs ground truth (--gt)");
    const int extent = ds.geometry.extent(est.cl_o.axis);
    const auto lines = report::curve_positions(r.curve, extent, est.cl_o.position);
    const auto curve = sim::accuracy_curve(pred_seg, *gt, lines);
    write_text(stem.string() + ".curve.csv",
               render([&](auto& os) { report::write_curve_csv(os, curve, est.cl_o.position); }));
    write_text(stem.string() + ".curve.svg", render([&](auto& os) {
                 report::write_svg(os, report::curve_plot(curve, est.cl_o.position, extent));
               }));
  }
  if (!r.out_dir.empty()) {
    write_text(stem.string() + ".calibration.json", to_json(est).dump(2) + "\n");
    write_text(stem.string() + ".events.csv", render([&](auto& os) { write_events_csv(os, result); }));
    write_text(stem.string() + ".report.json", j.dump(2) + "\n");
  }
  return j;
}

int cmd_run(const std::vector<std::string>& inputs, const InputOptions& in, const EstimateOptions& e,
            const RunOptions& r) {
  if (!r.gt.empty() && r.gt.size() != inputs.size())
    throw ConfigError("--gt must be given once per input (" + std::to_string(inputs.size()) + " inputs)");
  if (!(r.split > 0 && r.split < 1)) throw ConfigError("--split must lie in (0, 1)");

  std::vector<Json> reports(inputs.size());
  std::vector<std::string> errors(inputs.size());
  std::vector<int> codes(inputs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        reports[i] = run_one(inputs[i], r.gt.empty() ? "" : r.gt[i], in, e, r);
      } catch (const ConfigError& err) {
        errors[i] = err.what();
        codes[i] = 2;
      } catch (const std::exception& err) {
        errors[i] = err.what();
        codes[i] = 1;
      }
    }
  };
  const int jobs = std::clamp<int>(r.jobs, 1, static_cast<int>(inputs.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (codes[i]) {
      std::cerr << "error: " << inputs[i] << ": " << errors[i] << '\n';
      code = std::max(code, codes[i]);
    }
  }
  if (code) return code;
  if (inputs.size() == 1) {
    std::cout << reports[0].dump(2) << '\n';
  } else {
    Json all = Json::array();
    for (auto& rep : reports) all.push_back(std::move(rep));
    std::cout << all.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AIR-VC vehicle counting: calibrate a counting line and ROI, then count"};
  app.require_subcommand(1);

  std::string scene_path, sim_out;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic detection stream and its ground truth");
  simulate->add_option("scene", scene_path, "Scene spec JSON")->required();
  simulate->add_option("out_dir", sim_out, "Output directory")->required();
  simulate->add_option("--seed", seed, "Override the scene seed");

  InputOptions in;
  EstimateOptions est_opts;
  std::string dets, est_out, out_dir = ".";
  bool heatmap = false;
  auto* estimate = app.add_subcommand("estimate", "Derive the counting line, ROI and threshold");
  estimate->add_option("detections", dets, "Detection file")->required();
  add_input_flags(estimate, in);
  add_estimate_flags(estimate, est_opts);
  estimate->add_option("--out", est_out, "Calibration output path (default: stdout)");
  estimate->add_flag("--heatmap", heatmap, "Write the density profile as CSV and SVG");
  estimate->add_option("--out-dir", out_dir, "Directory for figures");

  std::string calib;
  CountOptions count_opts;
  auto* count = app.add_subcommand("count", "Count crossings with a prior calibration");
  count->add_option("detections", dets, "Detection file")->required();
  count->add_option("calibration", calib, "Calibration JSON from `estimate`")->required();
  add_input_flags(count, in);
  count->add_option("--events", count_opts.events, "Write crossing events as CSV");
  count->add_option("--gt-count", count_opts.gt_count, "Ground-truth count for the accuracy figure");
  count->add_option("--gt", count_opts.gt_path, "Ground-truth JSON from `simulate`");
  count->add_option("--out", count_opts.out, "Report output path (default: stdout)");
  count->add_flag("--no-timing", count_opts.no_timing, "Omit wall-clock fields");

  std::vector<std::string> inputs;
  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Split, estimate and count in one pass");
  run->add_option("detections", inputs, "Detection files")->required();
  add_input_flags(run, in);
  add_estimate_flags(run, est_opts);
  run->add_option("--split", run_opts.split, "Fraction of frames used for estimation");
  run->add_flag("--bench", run_opts.bench, "Time the ROI arm against the full-frame arm");
  run->add_option("--repeats", run_opts.repeats, "Benchmark repetitions (median is reported)")
      ->check(CLI::PositiveNumber);
  run->add_option("--curve", run_opts.curve, "Accuracy curve over N uniform lines plus cl_o")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("--heatmap", run_opts.heatmap, "Write the density profile as CSV and SVG");
  run->add_option("--gt", run_opts.gt, "Ground-truth JSON per input");
  run->add_option("--out-dir", run_opts.out_dir, "Directory for reports and figures");
  run->add_flag("--no-timing", run_opts.no_timing, "Omit wall-clock fields from the count result");
  run->add_option("--jobs", run_opts.jobs, "Inputs processed in parallel")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(scene_path, sim_out, seed);
    if (*estimate) return cmd_estimate(dets, in, est_opts, est_out, heatmap, out_dir);
    if (*count) return cmd_count(dets, calib, in, count_opts);
    if (*run) return cmd_run(inputs, in, est_opts, run_opts);
  } catch (const EstimationError& e) {
    std::cerr << "error: estimation stage " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
