#pragma once

// Multi-object tracker in the SORT/DeepSORT family. A constant-velocity
// Kalman filter over (cx, cy, aspect, height) provides Mahalanobis motion
// costs; cosine distance between embeddings (or 1 - IoU when embeddings are
// absent) provides feature costs. Each association emits
// motion_score = 1 - motion_cost and feature_score = 1 - feature_cost.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "airvc/assignment.hpp"
#include "airvc/core.hpp"

namespace airvc {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateMatrix = Eigen::Matrix<double, 8, 8>;
using MeasurementVector = Eigen::Matrix<double, 4, 1>;
using MeasurementMatrix = Eigen::Matrix<double, 4, 4>;

/// Chi-square 0.95 quantile for 4 degrees of freedom.
inline constexpr double kChi2Gate4 = 9.4877;

struct TrackerConfig {
  int max_misses = 5;
  int confirm_hits = 2;
  double gate = kChi2Gate4;
  double motion_weight = 0.5;  // feature weight is 1 - motion_weight
  bool record_history = true;
};

/// Constant-velocity Kalman filter with noise proportional to box height.
namespace kalman {

inline constexpr double kStdWeightPosition = 1.0 / 20.0;
inline constexpr double kStdWeightVelocity = 1.0 / 160.0;

inline MeasurementVector measurement(const Detection& det) {
  return {det.cx, det.cy, det.w / det.h, det.h};
}

inline void initiate(const Detection& det, StateVector& mean, StateMatrix& cov) {
  mean.setZero();
  mean.head<4>() = measurement(det);
  const double h = det.h;
  StateVector std;
  std << 2 * kStdWeightPosition * h, 2 * kStdWeightPosition * h, 1e-2, 2 * kStdWeightPosition * h,
      10 * kStdWeightVelocity * h, 10 * kStdWeightVelocity * h, 1e-5, 10 * kStdWeightVelocity * h;
  cov = std.array().square().matrix().asDiagonal();
}

inline StateMatrix transition() {
  StateMatrix f = StateMatrix::Identity();
  for (int i = 0; i < 4; ++i) f(i, 4 + i) = 1.0;
  return f;
}

inline void predict(StateVector& mean, StateMatrix& cov) {
  const double h = mean(3);
  StateVector std;
  std << kStdWeightPosition * h, kStdWeightPosition * h, 1e-2, kStdWeightPosition * h,
      kStdWeightVelocity * h, kStdWeightVelocity * h, 1e-5, kStdWeightVelocity * h;
  const StateMatrix q = std.array().square().matrix().asDiagonal();
  const StateMatrix f = transition();
  mean = f * mean;
  cov = f * cov * f.transpose() + q;
}

/// Projected measurement mean and innovation covariance.
inline void project(const StateVector& mean, const StateMatrix& cov, MeasurementVector& z_mean,
                    MeasurementMatrix& z_cov) {
  const double h = mean(3);
  MeasurementVector std;
  std << kStdWeightPosition * h, kStdWeightPosition * h, 1e-1, kStdWeightPosition * h;
  z_mean = mean.head<4>();
  z_cov = cov.topLeftCorner<4, 4>();
  z_cov.diagonal() += std.array().square().matrix();
}

inline void update(StateVector& mean, StateMatrix& cov, const MeasurementVector& z) {
  MeasurementVector z_mean;
  MeasurementMatrix z_cov;
  project(mean, cov, z_mean, z_cov);
  const Eigen::Matrix<double, 8, 4> pht = cov.leftCols<4>();
  const Eigen::LLT<MeasurementMatrix> llt(z_cov);
  const Eigen::Matrix<double, 8, 4> gain = llt.solve(pht.transpose()).transpose();
  mean += gain * (z - z_mean);
  cov -= gain * z_cov * gain.transpose();
}

}  // namespace kalman

struct TrackObservation {
  int frame = 0;
  Detection det;
  double motion_score = 1.0;
  double feature_score = 1.0;
};

struct Track {
  std::int64_t id = 0;
  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Identity();
  int age = 0;             // frames since creation
  int misses = 0;          // consecutive unmatched frames
  int hits = 0;            // consecutive matched frames
  bool confirmed = false;
  std::optional<std::vector<double>> last_embedding;
  std::vector<TrackObservation> history;

  double cx() const { return mean(0); }
  double cy() const { return mean(1); }
  double vx() const { return mean(4); }
  double vy() const { return mean(5); }
  double height() const { return mean(3); }
  double width() const { return mean(2) * mean(3); }
};

/// Advances the kinematic state by one frame; covariance grows by the process noise.
inline Track predict_step(Track track) {
  kalman::predict(track.mean, track.cov);
  ++track.age;
  return track;
}

inline Track make_track(std::int64_t id, const Detection& det, int frame, bool record_history) {
  Track t;
  t.id = id;
  kalman::initiate(det, t.mean, t.cov);
  t.hits = 1;
  t.last_embedding = det.embedding;
  if (record_history) t.history.push_back({frame, det, 1.0, 1.0});
  return t;
}

struct AssociationScores {
  double motion_score = 0.0;
  double feature_score = 0.0;

  /// Sum of the two scores, in [0, 2].
  double tracking_score() const { return motion_score + feature_score; }
};

/// Outcome for one detection of a tracker step.
struct Association {
  std::size_t detection = 0;
  std::int64_t track_id = 0;
  bool confirmed = false;
  /// Present when the detection extended an existing track; absent when it spawned one.
  std::optional<AssociationScores> scores;
};

inline double iou(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh) {
  const double ix = overlap(ax - aw / 2, ax + aw / 2, bx - bw / 2, bx + bw / 2);
  const double iy = overlap(ay - ah / 2, ay + ah / 2, by - bh / 2, by + bh / 2);
  const double inter = ix * iy;
  const double uni = aw * ah + bw * bh - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(1.0 - dot, 0.0, 1.0);
}

/// Per-pair costs before weighting. `gated` means the pair lies outside the
/// Mahalanobis gate and may not be matched.
struct PairCost {
  double motion = 1.0;
  double feature = 1.0;
  bool gated = true;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) {}

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<Track>& tracks() const { return live_; }
  const std::vector<Track>& retired() const { return retired_; }

  /// Live and retired tracks, ordered by id.
  std::vector<Track> all_tracks() const {
    std::vector<Track> out = retired_;
    out.insert(out.end(), live_.begin(), live_.end());
    std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
    return out;
  }

  PairCost pair_cost(const Track& track, const Detection& det) const {
    MeasurementVector z_mean;
    MeasurementMatrix z_cov;
    kalman::project(track.mean, track.cov, z_mean, z_cov);
    const MeasurementVector d = kalman::measurement(det) - z_mean;
    const double d2 = d.dot(z_cov.llt().solve(d));
    return costs_from(track, det, d2);
  }

  /// Processes one frame. Frames must arrive in increasing order; skipped
  /// frame indices count as misses for every live track.
  std::vector<Association> step(int frame, std::span<const Detection> dets) {
    const int gap = last_frame_ ? std::max(1, frame - *last_frame_) : 1;
    last_frame_ = frame;
    for (auto& t : live_) {
      for (int k = 0; k < gap; ++k) kalman::predict(t.mean, t.cov);
      t.age += gap;
      t.misses += gap - 1;
      if (gap > 1) t.hits = 0;
    }

    const std::size_t nt = live_.size(), nd = dets.size();
    std::vector<Association> out(nd);
    for (std::size_t j = 0; j < nd; ++j) out[j].detection = j;

    std::vector<int> row_to_col(nt, -1);
    std::vector<PairCost> pcs(nt * nd);
    if (nt > 0 && nd > 0) {
      CostMatrix cost(nt, nd);
      for (std::size_t i = 0; i < nt; ++i) {
        MeasurementVector z_mean;
        MeasurementMatrix z_cov;
        kalman::project(live_[i].mean, live_[i].cov, z_mean, z_cov);
        const MeasurementMatrix inv = z_cov.inverse();
        for (std::size_t j = 0; j < nd; ++j) {
          const MeasurementVector d = kalman::measurement(dets[j]) - z_mean;
          const PairCost pc = costs_from(live_[i], dets[j], d.dot(inv * d));
          pcs[i * nd + j] = pc;
          cost(i, j) = pc.gated ? kInfeasible
                                : cfg_.motion_weight * pc.motion + (1.0 - cfg_.motion_weight) * pc.feature;
        }
      }
      row_to_col = solve_assignment(cost);
    }

    std::vector<char> det_matched(nd, 0);
    for (std::size_t i = 0; i < nt; ++i) {
      const int j = row_to_col[i];
      Track& t = live_[i];
      if (j < 0 || pcs[i * nd + static_cast<std::size_t>(j)].gated) {
        ++t.misses;
        t.hits = 0;
        continue;
      }
      const auto ju = static_cast<std::size_t>(j);
      const PairCost& pc = pcs[i * nd + ju];
      const Detection& det = dets[ju];
      kalman::update(t.mean, t.cov, kalman::measurement(det));
      t.misses = 0;
      ++t.hits;
      if (t.hits >= cfg_.confirm_hits) t.confirmed = true;
      if (det.embedding) t.last_embedding = det.embedding;
      AssociationScores s{1.0 - pc.motion, 1.0 - pc.feature};
      if (cfg_.record_history) t.history.push_back({frame, det, s.motion_score, s.feature_score});
      det_matched[ju] = 1;
      out[ju].track_id = t.id;
      out[ju].confirmed = t.confirmed;
      out[ju].scores = s;
    }

    // Tentative tracks die on their first miss; confirmed ones after max_misses.
    std::vector<Track> keep;
    keep.reserve(live_.size() + nd);
    for (auto& t : live_) {
      const bool dead = t.misses > 0 && (!t.confirmed || t.misses > cfg_.max_misses);
      if (dead)
        retired_.push_back(std::move(t));
      else
        keep.push_back(std::move(t));
    }
    live_ = std::move(keep);

    for (std::size_t j = 0; j < nd; ++j) {
      if (det_matched[j]) continue;
      live_.push_back(make_track(next_id_++, dets[j], frame, cfg_.record_history));
      live_.back().confirmed = cfg_.confirm_hits <= 1;
      out[j].track_id = live_.back().id;
      out[j].confirmed = live_.back().confirmed;
    }
    return out;
  }

 private:
  static constexpr double kInfeasible = 1e6;

  PairCost costs_from(const Track& track, const Detection& det, double d2) const {
    PairCost pc;
    pc.gated = !(d2 <= cfg_.gate);
    pc.motion = std::clamp(d2 / cfg_.gate, 0.0, 1.0);
    if (track.last_embedding && det.embedding && track.last_embedding->size() == det.embedding->size()) {
      pc.feature = cosine_distance(*track.last_embedding, *det.embedding);
    } else {
      pc.feature = 1.0 - iou(track.cx(), track.cy(), track.width(), track.height(), det.cx, det.cy, det.w, det.h);
    }
    return pc;
  }

  TrackerConfig cfg_;
  std::vector<Track> live_;
  std::vector<Track> retired_;
  std::int64_t next_id_ = 1;
  std::optional<int> last_frame_;
};

}  // namespace airvc
