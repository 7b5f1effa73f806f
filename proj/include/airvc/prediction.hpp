#pragma once

// Prediction phase: ROI/threshold gating, tracking, and once-per-identity
// line-crossing counting. Also the accuracy and speed-improvement metrics.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "airvc/core.hpp"
#include "airvc/error.hpp"
#include "airvc/estimation.hpp"
#include "airvc/ingest.hpp"
#include "airvc/tracker.hpp"

namespace airvc {

struct CrossingEvent {
  int frame = 0;
  std::int64_t track_id = 0;
  Direction direction = Direction::Positive;  // Positive: toward increasing position

  bool operator==(const CrossingEvent&) const = default;
};

struct CountResult {
  std::int64_t count = 0;
  std::set<std::int64_t> counted_ids;
  std::vector<CrossingEvent> events;
  std::size_t frames_processed = 0;
  std::size_t detections_processed = 0;  // detections handed to the tracker
  double wall_time = 0.0;                // seconds

  std::int64_t count_in(Direction d) const {
    return std::count_if(events.begin(), events.end(), [d](const auto& e) { return e.direction == d; });
  }
  double fps() const { return wall_time > 0 ? static_cast<double>(frames_processed) / wall_time : 0.0; }
};

struct TrackedObservation {
  std::int64_t track_id = 0;
  bool confirmed = false;
  Detection det;
};

struct TrackedFrame {
  int frame = 0;
  std::vector<TrackedObservation> observations;
};

/// Streaming crossing counter. A track is counted the first time the sign of
/// its signed distance flips between consecutive matched detections while it
/// is confirmed. A sample exactly on the line (distance 0) keeps the previous
/// side, so landing on the line completes a crossing at the next nonzero sample.
class LineCounter {
 public:
  explicit LineCounter(CountingLine line) : line_(line) {}

  void observe(int frame, std::int64_t track_id, bool confirmed, const Detection& det) {
    const double d = signed_distance(line_, det);
    if (d == 0.0) return;
    const int side = d > 0 ? 1 : -1;
    auto [it, inserted] = last_side_.try_emplace(track_id, side);
    if (inserted) return;
    const int prev = it->second;
    it->second = side;
    if (prev == side || !confirmed) return;
    if (!result_.counted_ids.insert(track_id).second) return;
    result_.events.push_back({frame, track_id, side > 0 ? Direction::Positive : Direction::Negative});
    result_.count = static_cast<std::int64_t>(result_.counted_ids.size());
  }

  const CountResult& result() const { return result_; }
  CountResult& result() { return result_; }

 private:
  CountingLine line_;
  std::unordered_map<std::int64_t, int> last_side_;
  CountResult result_;
};

inline CountResult count_crossings(std::span<const TrackedFrame> frames, const CountingLine& line) {
  LineCounter counter(line);
  for (const auto& f : frames)
    for (const auto& o : f.observations) counter.observe(f.frame, o.track_id, o.confirmed, o.det);
  counter.result().frames_processed = frames.size();
  return counter.result();
}

/// Keeps detections whose center lies in the ROI and whose score is >= thr.
inline std::vector<Detection> filter_to_roi(std::span<const Detection> dets, const RoiRect& roi, double thr) {
  std::vector<Detection> out;
  for (const auto& d : dets)
    if (d.score >= thr && roi.contains(d.cx, d.cy)) out.push_back(d);
  return out;
}

struct PredictionOptions {
  bool use_roi = true;  // false: full-frame baseline (threshold still applied)
  TrackerConfig tracker{.record_history = false};
};

inline CountResult run_prediction(const SequenceDataset& ds, const EstimationResult& est,
                                  const PredictionOptions& opt = {}) {
  if (ds.geometry.width != est.geometry.width || ds.geometry.height != est.geometry.height)
    throw ConfigError("calibration geometry " + std::to_string(est.geometry.width) + "x" +
                      std::to_string(est.geometry.height) + " does not match input " +
                      std::to_string(ds.geometry.width) + "x" + std::to_string(ds.geometry.height));

  const RoiRect full{0, 0, ds.geometry.width, ds.geometry.height};
  const RoiRect& region = opt.use_roi ? est.roi : full;
  Tracker tracker(opt.tracker);
  LineCounter counter(est.cl_o);
  std::size_t handed = 0;

  const auto start = std::chrono::steady_clock::now();
  for (const auto& frame : ds.frames) {
    const auto kept = filter_to_roi(frame.detections, region, est.thr_o);
    handed += kept.size();
    const auto assoc = tracker.step(frame.index, kept);
    for (const auto& a : assoc) counter.observe(frame.index, a.track_id, a.confirmed, kept[a.detection]);
  }
  const auto stop = std::chrono::steady_clock::now();

  CountResult res = std::move(counter.result());
  res.frames_processed = ds.frames.size();
  res.detections_processed = handed;
  res.wall_time = std::chrono::duration<double>(stop - start).count();
  return res;
}

/// max(0, 1 - |predicted - truth| / truth) * 100.
inline double counting_accuracy(std::int64_t predicted, std::int64_t ground_truth) {
  if (ground_truth <= 0) throw DomainError("counting accuracy is undefined for a ground truth of 0");
  const double err = std::abs(static_cast<double>(predicted - ground_truth)) / static_cast<double>(ground_truth);
  return std::max(0.0, 1.0 - err) * 100.0;
}

/// (fps_roi - fps_frame) / fps_frame * 100.
inline double speed_improvement(double fps_roi, double fps_frame) {
  if (!(fps_frame > 0)) throw DomainError("full-frame FPS must be positive");
  return (fps_roi - fps_frame) / fps_frame * 100.0;
}

struct SpeedReport {
  double fps_roi = 0.0;
  double fps_frame = 0.0;
  double improvement = 0.0;
  double roi_detection_share = 0.0;  // detections reaching the ROI tracker / full-frame ones
};

/// Runs both arms `repeats` times and compares their median frame rates.
inline SpeedReport benchmark_speed(const SequenceDataset& ds, const EstimationResult& est, int repeats = 5) {
  if (ds.frames.empty()) throw DomainError("cannot benchmark an empty segment");
  std::vector<double> roi_fps, frame_fps;
  std::size_t roi_dets = 0, frame_dets = 0;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto a = run_prediction(ds, est, {.use_roi = true});
    const auto b = run_prediction(ds, est, {.use_roi = false});
    roi_fps.push_back(a.fps());
    frame_fps.push_back(b.fps());
    roi_dets = a.detections_processed;
    frame_dets = b.detections_processed;
  }
  SpeedReport s;
  s.fps_roi = median_of(roi_fps);
  s.fps_frame = median_of(frame_fps);
  s.improvement = speed_improvement(s.fps_roi, s.fps_frame);
  s.roi_detection_share = frame_dets ? static_cast<double>(roi_dets) / static_cast<double>(frame_dets) : 0.0;
  return s;
}

inline nlohmann::ordered_json to_json(const CountResult& r, bool include_timing = true) {
  nlohmann::ordered_json j;
  j["count"] = r.count;
  j["count_positive"] = r.count_in(Direction::Positive);
  j["count_negative"] = r.count_in(Direction::Negative);
  j["frames_processed"] = r.frames_processed;
  j["detections_processed"] = r.detections_processed;
  j["counted_ids"] = r.counted_ids;
  if (include_timing) {
    j["timing"]["wall_time"] = r.wall_time;
    j["timing"]["fps"] = r.fps();
  }
  return j;
}

inline nlohmann::ordered_json to_json(const SpeedReport& s) {
  nlohmann::ordered_json j;
  j["fps_roi"] = s.fps_roi;
  j["fps_frame"] = s.fps_frame;
  j["improvement"] = s.improvement;
  j["roi_detection_share"] = s.roi_detection_share;
  return j;
}

inline void write_events_csv(std::ostream& os, const CountResult& r) {
  os << "frame,track_id,direction\n";
  for (const auto& e : r.events) os << e.frame << ',' << e.track_id << ',' << to_string(e.direction) << '\n';
}

}  // namespace airvc
