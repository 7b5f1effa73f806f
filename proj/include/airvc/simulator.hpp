#pragma once

// Synthetic traffic generator with ground truth. Vehicles travel along lanes
// at constant speed; detection probability, box size and score depend on the
// position along the flow axis. Occluder bands model camera-limited regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airvc/core.hpp"
#include "airvc/error.hpp"
#include "airvc/ingest.hpp"
#include "airvc/prediction.hpp"
#include "airvc/score_stats.hpp"
#include "airvc/tracker.hpp"

namespace airvc::sim {

struct LaneSpec {
  double coord = 0.0;  // position on the axis perpendicular to the flow
  int direction = 1;   // +1: toward increasing position, -1: decreasing
};

/// Mean detection score as a function of flow-axis position.
struct ScoreProfile {
  std::vector<double> polynomial;                 // raw-position coefficients a_0..a_n
  std::vector<std::pair<double, double>> points;  // piecewise-linear (position, value), sorted

  double value(double p) const {
    double v = 0.0;
    if (!points.empty()) {
      if (p <= points.front().first) {
        v = points.front().second;
      } else if (p >= points.back().first) {
        v = points.back().second;
      } else {
        auto hi = std::upper_bound(points.begin(), points.end(), p,
                                   [](double x, const auto& pt) { return x < pt.first; });
        auto lo = hi - 1;
        const double f = (p - lo->first) / (hi->first - lo->first);
        v = lo->second + f * (hi->second - lo->second);
      }
    } else {
      for (auto it = polynomial.rbegin(); it != polynomial.rend(); ++it) v = v * p + *it;
    }
    return std::clamp(v, 0.0, 1.0);
  }
};

struct OccluderBand {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> lanes;  // empty: every lane
  double p_occ = 0.0;

  bool applies(double pos, int lane) const {
    if (pos < lo || pos > hi) return false;
    return lanes.empty() || std::find(lanes.begin(), lanes.end(), lane) != lanes.end();
  }
};

struct SceneSpec {
  FrameGeometry geometry{960, 540, 25.0};
  int duration = 1000;
  Axis axis = Axis::Vertical;
  std::vector<LaneSpec> lanes;
  double spawn_rate = 0.1;  // vehicles per frame over all lanes
  double speed_min = 4.0;
  double speed_max = 6.0;
  // Box size grows linearly with flow-axis position (perspective).
  double width0 = 50.0, width_slope = 0.0;
  double height0 = 40.0, height_slope = 0.0;
  ScoreProfile score_profile{{0.8}, {}};
  double score_noise = 0.05;
  std::vector<OccluderBand> occluders;
  double false_positive_rate = 0.0;
  double miss_rate = 0.0;
  double lateral_jitter = 0.5;
  double speed_variation = 0.1;
  std::uint64_t seed = 0;

  double box_width(double pos) const { return width0 + width_slope * pos; }
  double box_height(double pos) const { return height0 + height_slope * pos; }
  double extent_along(double pos) const { return axis == Axis::Vertical ? box_height(pos) : box_width(pos); }
};

/// Throws ConfigError naming the first offending field.
inline void validate(const SceneSpec& s) {
  auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
  if (s.geometry.width <= 0) fail("frame_width", "must be positive");
  if (s.geometry.height <= 0) fail("frame_height", "must be positive");
  if (s.duration <= 0) fail("duration", "must be positive");
  if (s.lanes.empty() && s.spawn_rate > 0) fail("lanes", "at least one lane is required when spawn_rate > 0");
  const double cross = s.geometry.cross_extent(s.axis), along_limit = s.geometry.extent(s.axis);
  for (std::size_t i = 0; i < s.lanes.size(); ++i) {
    const auto field = "lanes[" + std::to_string(i) + "]";
    if (s.lanes[i].coord < 0 || s.lanes[i].coord >= cross) fail(field + ".coord", "outside the frame");
    if (s.lanes[i].direction != 1 && s.lanes[i].direction != -1) fail(field + ".direction", "must be +1 or -1");
  }
  if (!(s.spawn_rate >= 0)) fail("spawn_rate", "must be non-negative");
  if (!(s.speed_min > 0) || !(s.speed_max >= s.speed_min)) fail("speed_range", "need 0 < min <= max");
  for (double p : {0.0, along_limit}) {
    if (!(s.box_width(p) > 0)) fail("size_profile.width", "box width must stay positive over the frame");
    if (!(s.box_height(p) > 0)) fail("size_profile.height", "box height must stay positive over the frame");
  }
  if (s.score_profile.polynomial.empty() && s.score_profile.points.empty())
    fail("score_profile", "needs polynomial coefficients or piecewise points");
  for (std::size_t i = 1; i < s.score_profile.points.size(); ++i)
    if (!(s.score_profile.points[i].first > s.score_profile.points[i - 1].first))
      fail("score_profile.piecewise", "positions must be strictly increasing");
  if (!(s.score_noise >= 0)) fail("score_noise", "must be non-negative");
  for (std::size_t i = 0; i < s.occluders.size(); ++i) {
    const auto field = "occluders[" + std::to_string(i) + "]";
    const auto& o = s.occluders[i];
    if (!(o.hi >= o.lo)) fail(field + ".band", "need lo <= hi");
    if (!(o.p_occ >= 0 && o.p_occ <= 1)) fail(field + ".p_occ", "must lie in [0,1]");
    for (int lane : o.lanes)
      if (lane < 0 || lane >= static_cast<int>(s.lanes.size())) fail(field + ".lanes", "unknown lane index");
  }
  if (!(s.false_positive_rate >= 0)) fail("false_positive_rate", "must be non-negative");
  if (!(s.miss_rate >= 0 && s.miss_rate <= 1)) fail("miss_rate", "must lie in [0,1]");
  if (!(s.lateral_jitter >= 0)) fail("lateral_jitter", "must be non-negative");
  if (!(s.speed_variation >= 0 && s.speed_variation < 1)) fail("speed_variation", "must lie in [0,1)");
}

struct Vehicle {
  std::int64_t id = 0;
  int lane = 0;
  int entry_frame = 0;
  int exit_frame = 0;  // last frame with the center inside the frame
  double start = 0.0;  // flow-axis position at entry_frame
  double speed = 0.0;  // signed, pixels per frame

  double position(int frame) const { return start + speed * (frame - entry_frame); }
};

struct GroundTruth {
  Axis axis = Axis::Vertical;
  std::vector<Vehicle> vehicles;

  std::int64_t total() const { return static_cast<std::int64_t>(vehicles.size()); }

  /// First frame at which the vehicle is strictly past `p` after having been
  /// strictly before it, or nothing if it never crosses while in the frame.
  std::optional<int> crossing_frame(const Vehicle& v, double p) const {
    const int dir = v.speed > 0 ? 1 : -1;
    auto before = [&](int t) { return dir * (v.position(t) - p) < 0; };
    auto past = [&](int t) { return dir * (v.position(t) - p) > 0; };
    if (!before(v.entry_frame)) return std::nullopt;
    int t = v.entry_frame + static_cast<int>(std::floor(std::abs(p - v.start) / std::abs(v.speed))) + 1;
    while (t > v.entry_frame + 1 && past(t - 1)) --t;
    while (!past(t)) ++t;
    if (t > v.exit_frame) return std::nullopt;
    return t;
  }

  /// Vehicles whose crossing of `p` happens in frames (after_frame, until_frame].
  std::int64_t crossings(double p, int after_frame, int until_frame) const {
    std::int64_t n = 0;
    for (const auto& v : vehicles) {
      const auto t = crossing_frame(v, p);
      if (t && *t > after_frame && *t <= until_frame) ++n;
    }
    return n;
  }
};

/// Frame range (after, until] for which a tracker run over `ds` can observe crossings.
inline std::pair<int, int> observable_range(const SequenceDataset& ds) {
  if (ds.frames.empty()) return {0, 0};
  return {ds.frames.front().index, ds.frames.back().index};
}

inline std::int64_t crossings_in(const GroundTruth& gt, double p, const SequenceDataset& ds) {
  const auto [after, until] = observable_range(ds);
  return ds.frames.empty() ? 0 : gt.crossings(p, after, until);
}

struct Scene {
  SequenceDataset dataset;
  GroundTruth truth;
};

/// Mean and lower-quartile of the score profile over integer positions;
/// false positives draw scores from [min, q25].
inline std::pair<double, double> lower_quartile_range(const SceneSpec& s) {
  std::vector<double> vals;
  const int n = s.geometry.extent(s.axis);
  for (int p = 0; p < n; ++p) vals.push_back(s.score_profile.value(p));
  std::sort(vals.begin(), vals.end());
  return {vals.front(), sorted_quantile(vals, 0.25)};
}

inline Scene generate(const SceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Axis axis = spec.axis;
  const double limit = spec.geometry.extent(axis);
  const double cross_limit = spec.geometry.cross_extent(axis);
  const auto [fp_lo, fp_hi] = lower_quartile_range(spec);
  const std::size_t n_lanes = spec.lanes.size();

  std::vector<double> lane_speed(n_lanes);
  for (auto& v : lane_speed) v = spec.speed_min + (spec.speed_max - spec.speed_min) * unit(rng);

  std::poisson_distribution<int> spawns(n_lanes ? spec.spawn_rate / static_cast<double>(n_lanes) : 0.0);
  std::poisson_distribution<int> fp_count(spec.false_positive_rate);
  std::vector<int> pending(n_lanes, 0);
  std::vector<std::optional<std::size_t>> leader(n_lanes);

  Scene scene;
  scene.truth.axis = axis;
  scene.dataset.geometry = spec.geometry;
  auto& vehicles = scene.truth.vehicles;
  std::vector<std::size_t> live;

  auto make_detection = [&](int frame, double pos, double cross_pos, double score) {
    Detection d;
    d.frame = frame;
    const double w = spec.box_width(pos), h = spec.box_height(pos);
    d.w = w;
    d.h = h;
    d.cx = axis == Axis::Vertical ? cross_pos : pos;
    d.cy = axis == Axis::Vertical ? pos : cross_pos;
    d.score = std::clamp(score, 0.0, 1.0);
    return d;
  };

  for (int t = 0; t < spec.duration; ++t) {
    // spawning
    for (std::size_t l = 0; l < n_lanes; ++l) {
      if (spec.spawn_rate > 0) pending[l] += spawns(rng);
      if (pending[l] == 0) continue;
      const int dir = spec.lanes[l].direction;
      const double start = dir > 0 ? 0.5 : limit - 0.5;
      double speed = lane_speed[l] * (1.0 + spec.speed_variation * (2.0 * unit(rng) - 1.0));
      if (leader[l]) {
        const Vehicle& lead = vehicles[*leader[l]];
        if (t <= lead.exit_frame) {
          const double lead_pos = lead.position(t);
          const double headway = 1.5 * std::max(spec.extent_along(lead_pos), spec.extent_along(start));
          if (std::abs(lead_pos - start) < headway) continue;  // entrance blocked, stays pending
          speed = std::min(speed, std::abs(lead.speed));
        }
      }
      --pending[l];
      Vehicle v;
      v.id = static_cast<std::int64_t>(vehicles.size()) + 1;
      v.lane = static_cast<int>(l);
      v.entry_frame = t;
      v.start = start;
      v.speed = dir * speed;
      const double travel = dir > 0 ? (limit - start) : start;  // distance until the center leaves
      v.exit_frame = t + static_cast<int>(std::ceil(travel / speed)) - 1;
      while (v.exit_frame > t && (v.position(v.exit_frame) < 0 || v.position(v.exit_frame) >= limit)) --v.exit_frame;
      while (v.position(v.exit_frame + 1) >= 0 && v.position(v.exit_frame + 1) < limit) ++v.exit_frame;
      v.exit_frame = std::min(v.exit_frame, spec.duration - 1);
      leader[l] = vehicles.size();
      live.push_back(vehicles.size());
      vehicles.push_back(v);
    }

    FrameBucket bucket{t, {}};
    std::vector<std::size_t> still;
    for (std::size_t idx : live) {
      const Vehicle& v = vehicles[idx];
      if (t > v.exit_frame) continue;
      still.push_back(idx);
      const double pos = v.position(t);
      double p_detect = 1.0 - spec.miss_rate;
      for (const auto& occ : spec.occluders)
        if (occ.applies(pos, v.lane)) p_detect *= occ.p_occ;
      const double u = unit(rng);
      const double jitter = spec.lateral_jitter * gauss(rng);
      const double noise = spec.score_noise * gauss(rng);
      if (u >= p_detect) continue;
      const double cross_pos = std::clamp(spec.lanes[static_cast<std::size_t>(v.lane)].coord + jitter, 0.0,
                                          std::nextafter(cross_limit, 0.0));
      Detection d = make_detection(t, pos, cross_pos, spec.score_profile.value(pos) + noise);
      d.source_id = v.id;
      bucket.detections.push_back(std::move(d));
    }
    live = std::move(still);

    const int n_fp = spec.false_positive_rate > 0 ? fp_count(rng) : 0;
    for (int k = 0; k < n_fp; ++k) {
      const double pos = unit(rng) * limit;
      const double cross_pos = unit(rng) * cross_limit;
      const double score = fp_lo + (fp_hi - fp_lo) * unit(rng);
      bucket.detections.push_back(make_detection(t, pos, cross_pos, score));
    }
    if (!bucket.detections.empty()) scene.dataset.frames.push_back(std::move(bucket));
  }
  scene.dataset.gt_count = scene.truth.total();
  return scene;
}

// ---------------------------------------------------------------------------
// accuracy versus counting-line position

struct CurvePoint {
  int position = 0;
  std::int64_t predicted = 0;
  std::int64_t truth = 0;
  std::optional<double> accuracy;  // undefined when truth is 0
};

struct CurveOptions {
  double min_score = 0.0;
  TrackerConfig tracker{.record_history = false};
};

/// Tracks the whole frame once, then counts crossings for every line position.
inline std::vector<TrackedFrame> track_full_frame(const SequenceDataset& ds, const CurveOptions& opt = {}) {
  Tracker tracker(opt.tracker);
  std::vector<TrackedFrame> out;
  out.reserve(ds.frames.size());
  for (const auto& frame : ds.frames) {
    std::vector<Detection> kept;
    for (const auto& d : frame.detections)
      if (d.score >= opt.min_score) kept.push_back(d);
    const auto assoc = tracker.step(frame.index, kept);
    TrackedFrame tf{frame.index, {}};
    for (const auto& a : assoc) tf.observations.push_back({a.track_id, a.confirmed, kept[a.detection]});
    out.push_back(std::move(tf));
  }
  return out;
}

inline std::vector<CurvePoint> accuracy_curve(const SequenceDataset& ds, const GroundTruth& gt,
                                              std::span<const int> positions, const CurveOptions& opt = {}) {
  const auto tracked = track_full_frame(ds, opt);
  std::vector<CurvePoint> out;
  for (int p : positions) {
    CurvePoint cp;
    cp.position = p;
    cp.predicted = count_crossings(tracked, {gt.axis, p}).count;
    cp.truth = crossings_in(gt, p, ds);
    if (cp.truth > 0) cp.accuracy = counting_accuracy(cp.predicted, cp.truth);
    out.push_back(cp);
  }
  return out;
}

/// `n` lines spread uniformly: position (i + 0.5) * extent / n.
inline std::vector<int> uniform_lines(int n, int extent) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    out.push_back(static_cast<int>(std::floor((i + 0.5) * extent / static_cast<double>(n))));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec s;
  auto field = [&](const char* name, auto fn) {
    try {
      if (j.contains(name)) fn(j.at(name));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
  };
  if (!j.is_object()) throw ConfigError("scene: expected a JSON object");
  for (const char* req : {"frame_width", "frame_height", "duration", "lanes"})
    if (!j.contains(req)) throw ConfigError(std::string(req) + ": required field missing");
  field("frame_width", [&](const auto& v) { s.geometry.width = v.template get<int>(); });
  field("frame_height", [&](const auto& v) { s.geometry.height = v.template get<int>(); });
  field("fps", [&](const auto& v) { s.geometry.fps = v.template get<double>(); });
  field("duration", [&](const auto& v) { s.duration = v.template get<int>(); });
  field("flow", [&](const auto& v) {
    try {
      s.axis = parse_axis(v.template get<std::string>());
    } catch (const ConfigError&) {
      throw ConfigError("flow: must be 'vertical' or 'horizontal'");
    }
  });
  field("lanes", [&](const auto& v) {
    s.lanes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      LaneSpec lane;
      lane.coord = v.at(i).at("coord").template get<double>();
      const auto& d = v.at(i).value("direction", nlohmann::json("positive"));
      if (d.is_string()) {
        const auto ds = d.template get<std::string>();
        if (ds != "positive" && ds != "negative")
          throw ConfigError("lanes[" + std::to_string(i) + "].direction: must be 'positive' or 'negative'");
        lane.direction = ds == "positive" ? 1 : -1;
      } else {
        lane.direction = d.template get<int>();
      }
      s.lanes.push_back(lane);
    }
  });
  field("spawn_rate", [&](const auto& v) { s.spawn_rate = v.template get<double>(); });
  field("speed_range", [&](const auto& v) {
    const auto r = v.template get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("speed_range: expected [min, max]");
    s.speed_min = r[0];
    s.speed_max = r[1];
  });
  field("size_profile", [&](const auto& v) {
    const auto w = v.at("width").template get<std::vector<double>>();
    const auto h = v.at("height").template get<std::vector<double>>();
    if (w.size() != 2 || h.size() != 2) throw ConfigError("size_profile: width/height must be [base, slope]");
    s.width0 = w[0];
    s.width_slope = w[1];
    s.height0 = h[0];
    s.height_slope = h[1];
  });
  field("score_profile", [&](const auto& v) {
    s.score_profile = {};
    if (v.contains("polynomial")) s.score_profile.polynomial = v.at("polynomial").template get<std::vector<double>>();
    if (v.contains("piecewise"))
      for (const auto& pt : v.at("piecewise")) {
        const auto xy = pt.template get<std::vector<double>>();
        if (xy.size() != 2) throw ConfigError("score_profile.piecewise: points must be [position, value]");
        s.score_profile.points.emplace_back(xy[0], xy[1]);
      }
  });
  field("score_noise", [&](const auto& v) { s.score_noise = v.template get<double>(); });
  field("occluders", [&](const auto& v) {
    for (const auto& o : v) {
      OccluderBand b;
      const auto band = o.at("band").template get<std::vector<double>>();
      if (band.size() != 2) throw ConfigError("occluders: band must be [lo, hi]");
      b.lo = band[0];
      b.hi = band[1];
      if (o.contains("lanes")) b.lanes = o.at("lanes").template get<std::vector<int>>();
      b.p_occ = o.value("p_occ", 0.0);
      s.occluders.push_back(b);
    }
  });
  field("false_positive_rate", [&](const auto& v) { s.false_positive_rate = v.template get<double>(); });
  field("miss_rate", [&](const auto& v) { s.miss_rate = v.template get<double>(); });
  field("lateral_jitter", [&](const auto& v) { s.lateral_jitter = v.template get<double>(); });
  field("speed_variation", [&](const auto& v) { s.speed_variation = v.template get<double>(); });
  field("seed", [&](const auto& v) { s.seed = v.template get<std::uint64_t>(); });
  validate(s);
  return s;
}

inline SceneSpec read_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scene file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scene file is not valid JSON: ") + e.what());
  }
  return scene_from_json(j);
}

inline nlohmann::ordered_json to_json(const GroundTruth& gt) {
  nlohmann::ordered_json j;
  j["axis"] = to_string(gt.axis);
  j["gt_count_total"] = gt.total();
  auto& arr = j["vehicles"] = nlohmann::ordered_json::array();
  for (const auto& v : gt.vehicles) {
    nlohmann::ordered_json o;
    o["id"] = v.id;
    o["lane"] = v.lane;
    o["entry_frame"] = v.entry_frame;
    o["exit_frame"] = v.exit_frame;
    o["start"] = v.start;
    o["speed"] = v.speed;
    arr.push_back(std::move(o));
  }
  return j;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth gt;
    gt.axis = parse_axis(j.at("axis").get<std::string>());
    for (const auto& o : j.at("vehicles")) {
      Vehicle v;
      v.id = o.at("id").get<std::int64_t>();
      v.lane = o.at("lane").get<int>();
      v.entry_frame = o.at("entry_frame").get<int>();
      v.exit_frame = o.at("exit_frame").get<int>();
      v.start = o.at("start").get<double>();
      v.speed = o.at("speed").get<double>();
      gt.vehicles.push_back(v);
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed ground-truth file: ") + e.what());
  }
}

inline GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open ground-truth file '" + path + "'");
  try {
    return ground_truth_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("ground-truth file is not valid JSON: ") + e.what());
  }
}

}  // namespace airvc::sim
