#pragma once

// Detection-record files (native JSONL and MOT-challenge CSV) and the
// temporal estimation/prediction split.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "airvc/core.hpp"
#include "airvc/error.hpp"

namespace airvc {

struct FrameBucket {
  int index = 0;
  std::vector<Detection> detections;

  bool operator==(const FrameBucket&) const = default;
};

struct SequenceDataset {
  FrameGeometry geometry;
  std::vector<FrameBucket> frames;  // strictly increasing index
  std::optional<std::int64_t> gt_count;

  bool operator==(const SequenceDataset&) const = default;

  std::size_t detection_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.detections.size();
    return n;
  }
};

struct IngestReport {
  SequenceDataset dataset;
  int rejected = 0;        // malformed or invalid lines
  int dropped_outside = 0; // boxes entirely outside the frame
  std::vector<std::string> warnings;
};

struct SplitConfig {
  double estimation_fraction = 0.7;
};

namespace detail {

inline constexpr double kEmbeddingNormTolerance = 1e-6;

/// Applies the ingestion geometry rules. Returns false if the record must be
/// dropped because its box does not intersect the frame.
inline bool clamp_to_frame(Detection& det, const FrameGeometry& g) {
  const double x0 = det.cx - det.w / 2, x1 = det.cx + det.w / 2;
  const double y0 = det.cy - det.h / 2, y1 = det.cy + det.h / 2;
  if (x1 <= 0 || y1 <= 0 || x0 >= g.width || y0 >= g.height) return false;
  const bool center_inside = det.cx >= 0 && det.cx < g.width && det.cy >= 0 && det.cy < g.height;
  if (center_inside) return true;
  // Center outside but box overlapping: clip the box and recenter it.
  const double cx0 = std::max(x0, 0.0), cx1 = std::min(x1, static_cast<double>(g.width));
  const double cy0 = std::max(y0, 0.0), cy1 = std::min(y1, static_cast<double>(g.height));
  det.w = cx1 - cx0;
  det.h = cy1 - cy0;
  det.cx = (cx0 + cx1) / 2;
  det.cy = (cy0 + cy1) / 2;
  return det.w > 0 && det.h > 0;
}

/// Checks record invariants; returns an empty string when valid.
inline std::string validate(const Detection& det) {
  if (det.frame < 0) return "negative frame index";
  if (!std::isfinite(det.cx) || !std::isfinite(det.cy)) return "non-finite center";
  if (!(det.w > 0) || !(det.h > 0)) return "non-positive box size";
  if (!(det.score >= 0.0 && det.score <= 1.0)) return "score outside [0,1]";
  if (det.embedding) {
    double sq = 0.0;
    for (double v : *det.embedding) sq += v * v;
    if (std::abs(std::sqrt(sq) - 1.0) > kEmbeddingNormTolerance) return "embedding is not unit norm";
  }
  return {};
}

inline void bucket_into(std::map<int, std::vector<Detection>>& buckets, Detection det) {
  buckets[det.frame].push_back(std::move(det));
}

inline std::vector<FrameBucket> to_frames(std::map<int, std::vector<Detection>>&& buckets) {
  std::vector<FrameBucket> frames;
  frames.reserve(buckets.size());
  for (auto& [idx, dets] : buckets) frames.push_back({idx, std::move(dets)});
  return frames;
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json header_json(const SequenceDataset& ds) {
  nlohmann::ordered_json h;
  h["frame_width"] = ds.geometry.width;
  h["frame_height"] = ds.geometry.height;
  if (ds.geometry.fps) h["fps"] = *ds.geometry.fps;
  if (ds.gt_count) h["gt_count"] = *ds.gt_count;
  return h;
}

inline nlohmann::ordered_json record_json(const Detection& det) {
  nlohmann::ordered_json r;
  r["frame"] = det.frame;
  r["cx"] = det.cx;
  r["cy"] = det.cy;
  r["w"] = det.w;
  r["h"] = det.h;
  r["score"] = det.score;
  if (det.embedding) r["emb"] = *det.embedding;
  if (det.source_id) r["gt_id"] = *det.source_id;
  return r;
}

inline void write_jsonl(std::ostream& os, const SequenceDataset& ds) {
  os << header_json(ds).dump() << '\n';
  for (const auto& frame : ds.frames)
    for (const auto& det : frame.detections) os << record_json(det).dump() << '\n';
}

inline std::string to_jsonl(const SequenceDataset& ds) {
  std::ostringstream os;
  write_jsonl(os, ds);
  return os.str();
}

inline void write_jsonl(const std::string& path, const SequenceDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_jsonl(os, ds);
}

inline IngestReport read_jsonl(std::istream& is) {
  IngestReport report;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::map<int, std::vector<Detection>> buckets;

  auto warn = [&](const std::string& msg) {
    report.warnings.push_back("line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      if (!have_header) throw FormatError("line " + std::to_string(lineno) + ": header is not valid JSON");
      ++report.rejected;
      warn("not valid JSON");
      continue;
    }
    if (!have_header) {
      if (!obj.is_object() || !obj.contains("frame_width") || !obj.contains("frame_height"))
        throw FormatError("missing header line with frame_width/frame_height");
      try {
        auto& g = report.dataset.geometry;
        g.width = obj.at("frame_width").get<int>();
        g.height = obj.at("frame_height").get<int>();
        if (obj.contains("fps")) g.fps = obj.at("fps").get<double>();
        if (obj.contains("gt_count")) report.dataset.gt_count = obj.at("gt_count").get<std::int64_t>();
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
      }
      if (!report.dataset.geometry.valid()) throw FormatError("header frame size must be positive");
      have_header = true;
      continue;
    }

    Detection det;
    try {
      det.frame = obj.at("frame").get<int>();
      det.cx = obj.at("cx").get<double>();
      det.cy = obj.at("cy").get<double>();
      det.w = obj.at("w").get<double>();
      det.h = obj.at("h").get<double>();
      det.score = obj.at("score").get<double>();
      if (obj.contains("emb")) det.embedding = obj.at("emb").get<std::vector<double>>();
      if (obj.contains("gt_id")) det.source_id = obj.at("gt_id").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
      ++report.rejected;
      warn(std::string("malformed record: ") + e.what());
      continue;
    }
    if (auto why = detail::validate(det); !why.empty()) {
      ++report.rejected;
      warn(why);
      continue;
    }
    if (!detail::clamp_to_frame(det, report.dataset.geometry)) {
      ++report.dropped_outside;
      continue;
    }
    detail::bucket_into(buckets, std::move(det));
  }
  if (!have_header) throw FormatError("missing header line");
  report.dataset.frames = detail::to_frames(std::move(buckets));
  return report;
}

inline IngestReport read_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return read_jsonl(is);
}

/// MOT-challenge rows: frame, id, bb_left, bb_top, bb_width, bb_height, conf, ...
inline IngestReport read_mot_csv(std::istream& is, const FrameGeometry& geometry) {
  if (!geometry.valid()) throw ConfigError("MOT input needs a positive --width/--height");
  IngestReport report;
  report.dataset.geometry = geometry;
  std::map<int, std::vector<Detection>> buckets;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 7) {
      ++report.rejected;
      report.warnings.push_back("line " + std::to_string(lineno) + ": expected at least 7 fields");
      continue;
    }
    std::optional<double> v[7];
    bool ok = true;
    for (int i = 0; i < 7; ++i) {
      v[i] = detail::parse_double(fields[i]);
      ok = ok && v[i].has_value();
    }
    if (!ok) {
      ++report.rejected;
      report.warnings.push_back("line " + std::to_string(lineno) + ": non-numeric field");
      continue;
    }
    Detection det;
    det.frame = static_cast<int>(*v[0]);
    det.w = *v[4];
    det.h = *v[5];
    det.cx = *v[2] + det.w / 2;
    det.cy = *v[3] + det.h / 2;
    det.score = std::clamp(*v[6], 0.0, 1.0);
    if (*v[1] >= 0) det.source_id = static_cast<std::int64_t>(*v[1]);
    if (auto why = detail::validate(det); !why.empty()) {
      ++report.rejected;
      report.warnings.push_back("line " + std::to_string(lineno) + ": " + why);
      continue;
    }
    if (!detail::clamp_to_frame(det, geometry)) {
      ++report.dropped_outside;
      continue;
    }
    detail::bucket_into(buckets, std::move(det));
  }
  report.dataset.frames = detail::to_frames(std::move(buckets));
  return report;
}

inline IngestReport read_mot_csv(const std::string& path, const FrameGeometry& geometry) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return read_mot_csv(is, geometry);
}

/// Number of frames assigned to estimation: ceil(fraction * F), clamped so
/// both sides keep at least one frame.
inline std::size_t estimation_frame_count(std::size_t frames, double fraction) {
  if (frames < 2) throw ConfigError("split needs at least 2 frames, got " + std::to_string(frames));
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0,1)");
  // The epsilon absorbs representation error such as 0.7 * 10 = 7.000000000000001.
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(frames) - 1e-9));
  return std::clamp<std::size_t>(n, 1, frames - 1);
}

inline std::pair<SequenceDataset, SequenceDataset> split(const SequenceDataset& ds, const SplitConfig& cfg = {}) {
  const std::size_t n_est = estimation_frame_count(ds.frames.size(), cfg.estimation_fraction);
  SequenceDataset est{ds.geometry, {}, std::nullopt};
  SequenceDataset pred{ds.geometry, {}, std::nullopt};
  est.frames.assign(ds.frames.begin(), ds.frames.begin() + static_cast<std::ptrdiff_t>(n_est));
  pred.frames.assign(ds.frames.begin() + static_cast<std::ptrdiff_t>(n_est), ds.frames.end());
  return {std::move(est), std::move(pred)};
}

}  // namespace airvc
