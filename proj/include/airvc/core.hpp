#pragma once

// Shared domain types: detections, flow axis, counting lines, ROI, frame
// geometry. Coordinates are pixels with the origin at the top-left corner and
// Y growing downward. Boxes are stored center-based.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airvc/error.hpp"

namespace airvc {

struct Detection {
  int frame = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double score = 0.0;
  std::optional<std::vector<double>> embedding;
  /// Ground-truth identity (simulator) or track id (track dumps).
  std::optional<std::int64_t> source_id;

  bool operator==(const Detection&) const = default;
};

/// Axis of dominant vehicle motion. Counting lines are perpendicular to it.
enum class Axis { Vertical, Horizontal };
enum class Direction { Positive, Negative, Bidirectional };

struct FlowAxis {
  Axis axis = Axis::Vertical;
  Direction direction = Direction::Positive;

  bool operator==(const FlowAxis&) const = default;
};

struct FrameGeometry {
  int width = 0;
  int height = 0;
  std::optional<double> fps;

  bool operator==(const FrameGeometry&) const = default;

  bool valid() const { return width > 0 && height > 0; }

  /// Number of counting-line positions along the flow axis.
  int extent(Axis axis) const { return axis == Axis::Vertical ? height : width; }
  int cross_extent(Axis axis) const { return axis == Axis::Vertical ? width : height; }
};

/// A line perpendicular to the flow axis. For vertical flow the line is
/// horizontal and `position` is a Y coordinate.
struct CountingLine {
  Axis axis = Axis::Vertical;
  int position = 0;

  bool operator==(const CountingLine&) const = default;
};

struct RoiRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const RoiRect&) const = default;

  bool contains(double px, double py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
};

/// Closed integer interval of line positions.
struct Span {
  int lo = 0;
  int hi = -1;

  bool empty() const { return hi < lo; }
  int length() const { return empty() ? 0 : hi - lo + 1; }
  bool contains(int p) const { return p >= lo && p <= hi; }

  bool operator==(const Span&) const = default;
};

inline double along(const Detection& det, Axis axis) {
  return axis == Axis::Vertical ? det.cy : det.cx;
}

inline double across(const Detection& det, Axis axis) {
  return axis == Axis::Vertical ? det.cx : det.cy;
}

inline double extent_along(const Detection& det, Axis axis) {
  return axis == Axis::Vertical ? det.h : det.w;
}

inline double extent_across(const Detection& det, Axis axis) {
  return axis == Axis::Vertical ? det.w : det.h;
}

inline double signed_distance(const CountingLine& line, const Detection& det) {
  return along(det, line.axis) - static_cast<double>(line.position);
}

/// Integer positions covered by the box along `axis`:
/// lo = floor(c - e/2), hi = ceil(c + e/2) - 1, clamped to [0, limit).
/// A pixel row p is covered iff [p, p+1) overlaps the box with positive length.
inline Span bbox_span(const Detection& det, Axis axis, const FrameGeometry& geometry) {
  const double c = along(det, axis);
  const double half = extent_along(det, axis) / 2.0;
  const int limit = geometry.extent(axis);
  const double lo_raw = std::floor(c - half);
  const double hi_raw = std::ceil(c + half) - 1.0;
  if (hi_raw < 0.0 || lo_raw > limit - 1.0 || hi_raw < lo_raw) return {};
  return {static_cast<int>(std::max(lo_raw, 0.0)),
          static_cast<int>(std::min(hi_raw, static_cast<double>(limit - 1)))};
}

/// Length of the overlap between [a0, a1] and [b0, b1].
inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline std::string_view to_string(Axis axis) {
  return axis == Axis::Vertical ? "vertical" : "horizontal";
}

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Positive: return "positive";
    case Direction::Negative: return "negative";
    case Direction::Bidirectional: return "bidirectional";
  }
  return "positive";
}

inline Axis parse_axis(std::string_view s) {
  if (s == "vertical") return Axis::Vertical;
  if (s == "horizontal") return Axis::Horizontal;
  throw ConfigError("unknown flow axis '" + std::string(s) + "'");
}

inline Direction parse_direction(std::string_view s) {
  if (s == "positive") return Direction::Positive;
  if (s == "negative") return Direction::Negative;
  if (s == "bidirectional") return Direction::Bidirectional;
  throw ConfigError("unknown flow direction '" + std::string(s) + "'");
}

}  // namespace airvc
