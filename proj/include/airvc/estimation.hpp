#pragma once

// Estimation phase: learn the counting line, ROI and confidence threshold
// from a segment of detections.
//
//   tracker pass -> flow axis -> per-line aggregates -> score models
//   -> density profile -> HDDR -> optimal line -> ROI -> threshold

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airvc/core.hpp"
#include "airvc/error.hpp"
#include "airvc/ingest.hpp"
#include "airvc/score_stats.hpp"
#include "airvc/tracker.hpp"

namespace airvc {

struct EstimationConfig {
  double alpha = 1.5;
  double tau = 0.8;           // HDDR threshold as a fraction of the smoothed peak
  int max_order = 6;
  int min_samples = 5;        // per-line samples needed to enter the regression
  bool equal_weight = true;   // halve tracking scores so both terms span [0,1]
  TrackerConfig tracker;
};

/// A detection together with the tracking score of the association that
/// consumed it (absent when it spawned a new track).
struct ScoredDetection {
  Detection det;
  std::optional<double> tracking_score;
};

struct LineAggregate {
  int position = 0;
  std::vector<double> detection_scores;
  std::vector<double> tracking_scores;
  double density_mass = 0.0;
  int sample_count = 0;
};

struct DensityProfile {
  std::vector<double> masses;
  std::vector<double> smoothed;
  Span hddr;
};

struct ScoreModels {
  ScoreModel detection;
  ScoreModel tracking;

  double total(double p) const { return detection.evaluate(p) + tracking.evaluate(p); }
};

struct RoiResult {
  RoiRect roi;
  double average_extent = 0.0;  // H_ave for vertical flow, W_ave for horizontal
};

struct EstimationResult {
  FrameGeometry geometry;
  FlowAxis flow;
  CountingLine cl_o;
  Span hddr;
  RoiRect roi;
  double thr_o = 0.0;
  double average_extent = 0.0;
  double alpha = 1.5;
  bool equal_weight = true;
  ScoreModels models;
  std::string input_hash;
  EstimationConfig config;
};

/// Intermediate products, kept for reports and figures.
struct EstimationTrace {
  std::vector<ScorePoint> detection_series;
  std::vector<ScorePoint> tracking_series;
  DensityProfile density;
  std::size_t detections = 0;
  std::size_t tracks = 0;
};

// ---------------------------------------------------------------------------
// flow axis

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Dominant motion axis from consecutive matched detections of every track.
/// Direction is Bidirectional when at least `min_share` of the moving tracks
/// travel against the majority.
inline FlowAxis infer_flow_axis(std::span<const Track> tracks, double min_share = 0.2) {
  std::vector<double> adx, ady;
  std::vector<std::vector<double>> per_track_dx, per_track_dy;
  for (const auto& t : tracks) {
    if (t.history.size() < 2) continue;
    auto& tdx = per_track_dx.emplace_back();
    auto& tdy = per_track_dy.emplace_back();
    for (std::size_t i = 1; i < t.history.size(); ++i) {
      const double dx = t.history[i].det.cx - t.history[i - 1].det.cx;
      const double dy = t.history[i].det.cy - t.history[i - 1].det.cy;
      adx.push_back(std::abs(dx));
      ady.push_back(std::abs(dy));
      tdx.push_back(dx);
      tdy.push_back(dy);
    }
  }
  if (adx.empty()) throw EstimationError("flow", "no track with two or more matched detections");

  FlowAxis flow;
  flow.axis = median_of(ady) > median_of(adx) ? Axis::Vertical : Axis::Horizontal;
  const auto& per_track = flow.axis == Axis::Vertical ? per_track_dy : per_track_dx;
  int pos = 0, neg = 0;
  for (const auto& d : per_track) {
    const double m = median_of(d);
    if (m > 0) ++pos;
    if (m < 0) ++neg;
  }
  const int moving = pos + neg;
  if (moving > 0 && std::min(pos, neg) >= min_share * moving)
    flow.direction = Direction::Bidirectional;
  else
    flow.direction = pos >= neg ? Direction::Positive : Direction::Negative;
  return flow;
}

// ---------------------------------------------------------------------------
// per-line aggregation

/// Every detection adds its score to each line its box spans; density at a
/// line is the box area falling in that pixel row (or column), so the masses
/// sum to the in-frame box area.
inline std::vector<LineAggregate> aggregate_lines(std::span<const ScoredDetection> dets, Axis axis,
                                                  const FrameGeometry& geometry) {
  const int n = geometry.extent(axis);
  const double cross_limit = geometry.cross_extent(axis);
  std::vector<LineAggregate> lines(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) lines[static_cast<std::size_t>(p)].position = p;

  for (const auto& sd : dets) {
    const Detection& d = sd.det;
    const Span span = bbox_span(d, axis, geometry);
    if (span.empty()) continue;
    const double c = along(d, axis), half = extent_along(d, axis) / 2;
    const double ca = across(d, axis), cross_half = extent_across(d, axis) / 2;
    const double cross = overlap(ca - cross_half, ca + cross_half, 0.0, cross_limit);
    for (int p = span.lo; p <= span.hi; ++p) {
      auto& line = lines[static_cast<std::size_t>(p)];
      line.detection_scores.push_back(d.score);
      if (sd.tracking_score) line.tracking_scores.push_back(*sd.tracking_score);
      line.density_mass += cross * overlap(c - half, c + half, p, p + 1.0);
      ++line.sample_count;
    }
  }
  return lines;
}

inline std::vector<double> density_masses(std::span<const LineAggregate> lines) {
  std::vector<double> m(lines.size());
  std::transform(lines.begin(), lines.end(), m.begin(), [](const auto& l) { return l.density_mass; });
  return m;
}

/// Per-line IQR-filtered means. Tracking scores are halved when `equal_weight`.
inline std::pair<std::vector<ScorePoint>, std::vector<ScorePoint>> score_series(
    std::span<const LineAggregate> lines, int min_samples, bool equal_weight) {
  std::vector<ScorePoint> det_series, trk_series;
  const double trk_scale = equal_weight ? 0.5 : 1.0;
  for (const auto& line : lines) {
    if (static_cast<int>(line.detection_scores.size()) >= min_samples)
      det_series.push_back({static_cast<double>(line.position), mean_of(iqr_filter(line.detection_scores))});
    if (static_cast<int>(line.tracking_scores.size()) >= min_samples)
      trk_series.push_back(
          {static_cast<double>(line.position), trk_scale * mean_of(iqr_filter(line.tracking_scores))});
  }
  return {std::move(det_series), std::move(trk_series)};
}

inline ScoreModels fit_score_models(std::span<const LineAggregate> lines, const EstimationConfig& cfg = {},
                                    EstimationTrace* trace = nullptr) {
  auto [det_series, trk_series] = score_series(lines, cfg.min_samples, cfg.equal_weight);
  if (det_series.size() < 2)
    throw EstimationError("fit", "fewer than 2 lines carry enough detection scores");
  if (trk_series.size() < 2)
    throw EstimationError("fit", "fewer than 2 lines carry enough tracking scores");
  ScoreModels models;
  try {
    models.detection = select_order(det_series, cfg.max_order);
    models.tracking = select_order(trk_series, cfg.max_order);
  } catch (const FitError& e) {
    throw EstimationError("fit", e.what());
  }
  if (trace) {
    trace->detection_series = std::move(det_series);
    trace->tracking_series = std::move(trk_series);
  }
  return models;
}

// ---------------------------------------------------------------------------
// density profile / HDDR

/// Centered moving average; the window shrinks at the borders.
inline std::vector<double> moving_average(std::span<const double> v, int window) {
  const int n = static_cast<int>(v.size());
  const int half = std::max(0, window / 2);
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[static_cast<std::size_t>(i)];
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    out[static_cast<std::size_t>(i)] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
  }
  return out;
}

/// Widest contiguous run of smoothed density at or above tau * max. Ties go
/// to the run with more raw mass, then to the smaller start.
inline DensityProfile find_hddr(std::span<const double> masses, int window, double tau = 0.8) {
  DensityProfile prof;
  prof.masses.assign(masses.begin(), masses.end());
  double total = 0.0;
  for (double m : masses) total += m;
  if (!(total > 0.0)) throw EstimationError("density", "density profile has no mass");

  prof.smoothed = moving_average(masses, window);
  const double peak = *std::max_element(prof.smoothed.begin(), prof.smoothed.end());
  const double threshold = tau * peak;

  Span best;
  double best_mass = -1.0;
  const int n = static_cast<int>(masses.size());
  for (int i = 0; i < n;) {
    if (prof.smoothed[static_cast<std::size_t>(i)] < threshold) {
      ++i;
      continue;
    }
    int j = i;
    double mass = 0.0;
    while (j < n && prof.smoothed[static_cast<std::size_t>(j)] >= threshold) mass += masses[static_cast<std::size_t>(j++)];
    const Span run{i, j - 1};
    if (run.length() > best.length() || (run.length() == best.length() && mass > best_mass)) {
      best = run;
      best_mass = mass;
    }
    i = j;
  }
  prof.hddr = best;
  return prof;
}

// ---------------------------------------------------------------------------
// optimal counting line

/// Exhaustive integer scan of D_s + T_s over [hddr.lo, hddr.hi]. Ties go to
/// the position nearest the interval midpoint, then to the smaller position.
inline int find_optimal_position(const ScoreModels& models, Span hddr) {
  if (hddr.empty()) throw EstimationError("search", "empty search interval");
  const double mid = 0.5 * (hddr.lo + hddr.hi);
  int best = hddr.lo;
  double best_score = models.total(hddr.lo);
  for (int p = hddr.lo + 1; p <= hddr.hi; ++p) {
    const double s = models.total(p);
    if (s > best_score || (s == best_score && std::abs(p - mid) < std::abs(best - mid))) {
      best = p;
      best_score = s;
    }
  }
  return best;
}

inline CountingLine find_optimal_line(const ScoreModels& models, Span hddr, Axis axis) {
  return {axis, find_optimal_position(models, hddr)};
}

// ---------------------------------------------------------------------------
// ROI and threshold

/// Band of `extent` pixels centered on `center`, shifted back inside [0, limit).
inline std::pair<int, int> centered_band(int center, int extent, int limit) {
  if (extent >= limit) return {0, limit};
  int origin = center - extent / 2;
  origin = std::clamp(origin, 0, limit - extent);
  return {origin, extent};
}

inline RoiRect roi_from_extent(const CountingLine& line, int extent, const FrameGeometry& geometry) {
  const auto [origin, size] = centered_band(line.position, extent, geometry.extent(line.axis));
  if (line.axis == Axis::Vertical) return {0, origin, geometry.width, size};
  return {origin, 0, size, geometry.height};
}

/// ROI centered on the line, alpha times the IQR-filtered mean box extent
/// (along the flow axis) of detections whose span covers the line.
inline RoiResult derive_roi(const CountingLine& line, std::span<const Detection> dets, const FrameGeometry& geometry,
                            double alpha = 1.5) {
  std::vector<double> extents;
  for (const auto& d : dets) {
    if (bbox_span(d, line.axis, geometry).contains(line.position)) extents.push_back(extent_along(d, line.axis));
  }
  if (extents.empty()) throw EstimationError("roi", "no detection covers the counting line");
  RoiResult r;
  r.average_extent = mean_of(iqr_filter(extents));
  const int extent = std::max(1, static_cast<int>(std::lround(alpha * r.average_extent)));
  r.roi = roi_from_extent(line, extent, geometry);
  return r;
}

inline double select_threshold(std::span<const double> scores) {
  if (scores.empty()) throw EstimationError("threshold", "no detection scores inside the ROI");
  const auto kept = iqr_filter(scores);
  return *std::min_element(kept.begin(), kept.end());
}

// ---------------------------------------------------------------------------
// composition

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runs the tracker over every frame and returns each detection with the
/// tracking score of its association.
inline std::vector<ScoredDetection> track_and_score(const SequenceDataset& ds, Tracker& tracker) {
  std::vector<ScoredDetection> out;
  out.reserve(ds.detection_count());
  for (const auto& frame : ds.frames) {
    const auto assoc = tracker.step(frame.index, frame.detections);
    for (const auto& a : assoc) {
      ScoredDetection sd{frame.detections[a.detection], std::nullopt};
      if (a.scores) sd.tracking_score = a.scores->tracking_score();
      out.push_back(std::move(sd));
    }
  }
  return out;
}

inline int median_extent(std::span<const ScoredDetection> dets, Axis axis) {
  std::vector<double> e;
  e.reserve(dets.size());
  for (const auto& d : dets) e.push_back(extent_along(d.det, axis));
  return std::max(1, static_cast<int>(std::lround(median_of(std::move(e)))));
}

inline EstimationResult run_estimation(const SequenceDataset& ds, const EstimationConfig& cfg = {},
                                       EstimationTrace* trace = nullptr) {
  if (!ds.geometry.valid()) throw EstimationError("input", "invalid frame geometry");
  if (!(cfg.alpha > 0)) throw EstimationError("input", "alpha must be positive");
  if (ds.detection_count() == 0) throw EstimationError("aggregation", "no detections in the estimation segment");

  Tracker tracker(cfg.tracker);
  const auto scored = track_and_score(ds, tracker);
  const auto tracks = tracker.all_tracks();

  EstimationResult res;
  res.geometry = ds.geometry;
  res.alpha = cfg.alpha;
  res.equal_weight = cfg.equal_weight;
  res.config = cfg;
  res.flow = infer_flow_axis(tracks);
  const Axis axis = res.flow.axis;

  const auto lines = aggregate_lines(scored, axis, ds.geometry);
  res.models = fit_score_models(lines, cfg, trace);

  DensityProfile density = find_hddr(density_masses(lines), median_extent(scored, axis), cfg.tau);
  res.hddr = density.hddr;
  res.cl_o = find_optimal_line(res.models, res.hddr, axis);

  std::vector<Detection> dets;
  dets.reserve(scored.size());
  for (const auto& sd : scored) dets.push_back(sd.det);
  const RoiResult roi = derive_roi(res.cl_o, dets, ds.geometry, cfg.alpha);
  res.roi = roi.roi;
  res.average_extent = roi.average_extent;

  std::vector<double> roi_scores;
  for (const auto& d : dets)
    if (res.roi.contains(d.cx, d.cy)) roi_scores.push_back(d.score);
  res.thr_o = select_threshold(roi_scores);
  res.input_hash = "fnv1a64:" + fnv1a_hex(to_jsonl(ds));

  if (trace) {
    trace->density = std::move(density);
    trace->detections = scored.size();
    trace->tracks = tracks.size();
  }
  return res;
}

// ---------------------------------------------------------------------------
// calibration file

inline nlohmann::ordered_json to_json(const EstimationConfig& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["max_order"] = c.max_order;
  j["min_samples"] = c.min_samples;
  j["equal_weight"] = c.equal_weight;
  j["max_misses"] = c.tracker.max_misses;
  j["confirm_hits"] = c.tracker.confirm_hits;
  j["gate"] = c.tracker.gate;
  return j;
}

inline nlohmann::ordered_json to_json(const RoiRect& r) {
  nlohmann::ordered_json j;
  j["x"] = r.x;
  j["y"] = r.y;
  j["width"] = r.width;
  j["height"] = r.height;
  return j;
}

inline nlohmann::ordered_json to_json(const EstimationResult& r) {
  nlohmann::ordered_json j;
  j["geometry"]["width"] = r.geometry.width;
  j["geometry"]["height"] = r.geometry.height;
  if (r.geometry.fps) j["geometry"]["fps"] = *r.geometry.fps;
  j["flow"]["axis"] = to_string(r.flow.axis);
  j["flow"]["direction"] = to_string(r.flow.direction);
  j["cl_o"] = r.cl_o.position;
  j["hddr"] = {r.hddr.lo, r.hddr.hi};
  j["roi"] = to_json(r.roi);
  j["thr_o"] = r.thr_o;
  j["alpha"] = r.alpha;
  j["average_extent"] = r.average_extent;
  j["equal_weight"] = r.equal_weight;
  j["detection_model"] = to_json(r.models.detection);
  j["tracking_model"] = to_json(r.models.tracking);
  j["provenance"]["input_hash"] = r.input_hash;
  j["provenance"]["config"] = to_json(r.config);
  return j;
}

inline EstimationResult estimation_from_json(const nlohmann::json& j) {
  try {
    EstimationResult r;
    r.geometry.width = j.at("geometry").at("width").get<int>();
    r.geometry.height = j.at("geometry").at("height").get<int>();
    if (j.at("geometry").contains("fps")) r.geometry.fps = j.at("geometry").at("fps").get<double>();
    r.flow.axis = parse_axis(j.at("flow").at("axis").get<std::string>());
    r.flow.direction = parse_direction(j.at("flow").at("direction").get<std::string>());
    r.cl_o = {r.flow.axis, j.at("cl_o").get<int>()};
    const auto hddr = j.at("hddr").get<std::vector<int>>();
    if (hddr.size() != 2) throw FormatError("hddr must have two entries");
    r.hddr = {hddr[0], hddr[1]};
    const auto& roi = j.at("roi");
    r.roi = {roi.at("x").get<int>(), roi.at("y").get<int>(), roi.at("width").get<int>(), roi.at("height").get<int>()};
    r.thr_o = j.at("thr_o").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.average_extent = j.at("average_extent").get<double>();
    r.equal_weight = j.at("equal_weight").get<bool>();
    r.models.detection = score_model_from_json(j.at("detection_model"));
    r.models.tracking = score_model_from_json(j.at("tracking_model"));
    if (j.contains("provenance")) {
      const auto& prov = j.at("provenance");
      r.input_hash = prov.value("input_hash", "");
      if (prov.contains("config")) {
        const auto& c = prov.at("config");
        r.config.alpha = c.value("alpha", r.config.alpha);
        r.config.tau = c.value("tau", r.config.tau);
        r.config.max_order = c.value("max_order", r.config.max_order);
        r.config.min_samples = c.value("min_samples", r.config.min_samples);
        r.config.equal_weight = c.value("equal_weight", r.config.equal_weight);
        r.config.tracker.max_misses = c.value("max_misses", r.config.tracker.max_misses);
        r.config.tracker.confirm_hits = c.value("confirm_hits", r.config.tracker.confirm_hits);
        r.config.tracker.gate = c.value("gate", r.config.tracker.gate);
      }
    }
    if (!(r.thr_o >= 0.0 && r.thr_o <= 1.0)) throw FormatError("thr_o outside [0,1]");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed calibration file: ") + e.what());
  }
}

}  // namespace airvc
