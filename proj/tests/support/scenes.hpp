#pragma once

// Scene presets shared by the integration and acceptance suites.

#include <cstdint>

#include "airvc/simulator.hpp"

namespace airvc::testing {

/// Single road, three lanes in one direction, perspective growth, a score
/// peak in the upper half, moderate noise, no occluder.
inline sim::SceneSpec single_road(std::uint64_t seed) {
  sim::SceneSpec s;
  s.geometry = {960, 540, 25.0};
  s.duration = 1500;
  s.lanes = {{300, 1}, {480, 1}, {660, 1}};
  s.spawn_rate = 0.25;
  s.speed_min = 4.0;
  s.speed_max = 7.0;
  s.width0 = 40;
  s.width_slope = 0.11;
  s.height0 = 30;
  s.height_slope = 0.08;
  s.score_profile.polynomial.clear();
  s.score_profile.points = {{0, 0.45}, {300, 0.85}, {540, 0.70}};
  s.score_noise = 0.05;
  s.false_positive_rate = 0.1;
  s.miss_rate = 0.02;
  s.seed = seed;
  return s;
}

/// Four lanes; the two left lanes are hidden in the band [200, 260], right
/// where the score profile peaks.
inline sim::SceneSpec camera_limited(std::uint64_t seed) {
  sim::SceneSpec s = single_road(seed);
  s.lanes = {{240, 1}, {400, 1}, {560, 1}, {720, 1}};
  s.spawn_rate = 0.3;
  s.score_profile.points = {{0, 0.5}, {230, 0.92}, {540, 0.55}};
  s.occluders = {{200, 260, {0, 1}, 0.0}};
  return s;
}

/// Eight lanes, two directions, dense traffic: a thin ROI sees under a
/// quarter of the detections.
inline sim::SceneSpec dense_highway(std::uint64_t seed) {
  sim::SceneSpec s = single_road(seed);
  s.lanes.clear();
  for (int i = 0; i < 8; ++i) s.lanes.push_back({90.0 + 110.0 * i, i < 4 ? 1 : -1});
  s.spawn_rate = 0.8;
  s.width0 = 30;
  s.width_slope = 0.1;
  return s;
}

/// Noise-free single lane: every live vehicle detected every frame.
inline sim::SceneSpec perfect_sensing(std::uint64_t seed) {
  sim::SceneSpec s = single_road(seed);
  s.lanes = {{480, 1}};
  s.spawn_rate = 0.05;
  s.score_noise = 0.0;
  s.false_positive_rate = 0.0;
  s.miss_rate = 0.0;
  s.lateral_jitter = 0.0;
  return s;
}

}  // namespace airvc::testing
