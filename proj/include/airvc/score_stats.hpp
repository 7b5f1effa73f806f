#pragma once

// Statistical primitives for score modeling: IQR outlier filtering,
// polynomial least squares, and RMSE-based order selection (a fit is accepted
// once its RMSE drops below half the standard deviation of the fitted data).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "airvc/error.hpp"

namespace airvc {

/// Quantile of already-sorted data, linear interpolation at position (N-1)q.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of empty data");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

struct IqrFences {
  double q1 = 0.0;
  double q3 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline IqrFences iqr_fences(std::span<const double> values, double k = 1.5) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  IqrFences f;
  f.q1 = sorted_quantile(sorted, 0.25);
  f.q3 = sorted_quantile(sorted, 0.75);
  const double iqr = f.q3 - f.q1;
  f.lower = f.q1 - k * iqr;
  f.upper = f.q3 + k * iqr;
  return f;
}

/// Keeps the values inside [Q1 - 1.5 IQR, Q3 + 1.5 IQR], preserving order.
inline std::vector<double> iqr_filter(std::span<const double> values) {
  if (values.size() <= 1) return {values.begin(), values.end()};
  const IqrFences f = iqr_fences(values);
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values)
    if (v >= f.lower && v <= f.upper) kept.push_back(v);
  return kept;
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Population standard deviation.
inline double stddev_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

struct ScorePoint {
  double position = 0.0;
  double value = 0.0;
};

/// Polynomial score model. Coefficients live in the normalized basis
/// t = (p - mid) / half, which maps [range_lo, range_hi] onto [-1, 1].
struct ScoreModel {
  std::vector<double> coefficients;
  int order = 0;
  double rmse = 0.0;
  double data_std = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;

  bool operator==(const ScoreModel&) const = default;

  double mid() const { return 0.5 * (range_lo + range_hi); }
  double half_width() const {
    const double h = 0.5 * (range_hi - range_lo);
    return h > 0 ? h : 1.0;
  }
  double normalize(double p) const { return (p - mid()) / half_width(); }
  bool in_range(double p) const { return p >= range_lo && p <= range_hi; }

  /// Horner evaluation after the affine normalization. Extrapolation is allowed.
  double evaluate(double p) const {
    const double t = normalize(p);
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  /// Coefficients a_0..a_n of the same polynomial in the raw position p.
  std::vector<double> raw_coefficients() const {
    const int n = static_cast<int>(coefficients.size());
    std::vector<double> raw(static_cast<std::size_t>(n), 0.0);
    const double s = 1.0 / half_width(), shift = -mid();
    // (s (p + shift))^k expanded binomially.
    for (int k = 0; k < n; ++k) {
      const double ak = coefficients[static_cast<std::size_t>(k)] * std::pow(s, k);
      double binom = 1.0;
      for (int j = 0; j <= k; ++j) {
        raw[static_cast<std::size_t>(j)] += ak * binom * std::pow(shift, k - j);
        binom = binom * (k - j) / (j + 1);
      }
    }
    return raw;
  }
};

inline nlohmann::ordered_json to_json(const ScoreModel& m) {
  nlohmann::ordered_json j;
  j["order"] = m.order;
  j["coeffs"] = m.coefficients;
  j["rmse"] = m.rmse;
  j["std"] = m.data_std;
  j["range"] = {m.range_lo, m.range_hi};
  return j;
}

inline ScoreModel score_model_from_json(const nlohmann::json& j) {
  ScoreModel m;
  m.order = j.at("order").get<int>();
  m.coefficients = j.at("coeffs").get<std::vector<double>>();
  m.rmse = j.at("rmse").get<double>();
  m.data_std = j.at("std").get<double>();
  const auto r = j.at("range").get<std::vector<double>>();
  if (r.size() != 2) throw FormatError("score model range must have two entries");
  m.range_lo = r[0];
  m.range_hi = r[1];
  if (static_cast<int>(m.coefficients.size()) != m.order + 1)
    throw FormatError("score model coefficient count does not match order");
  return m;
}

inline std::size_t distinct_positions(std::span<const ScorePoint> points) {
  std::vector<double> ps;
  ps.reserve(points.size());
  for (const auto& pt : points) ps.push_back(pt.position);
  std::sort(ps.begin(), ps.end());
  return static_cast<std::size_t>(std::unique(ps.begin(), ps.end()) - ps.begin());
}

/// Least-squares polynomial fit of the given order.
inline ScoreModel polyfit(std::span<const ScorePoint> points, int order) {
  if (order < 0) throw FitError("negative polynomial order");
  const auto n_coef = static_cast<std::size_t>(order) + 1;
  if (distinct_positions(points) < n_coef)
    throw FitError("order " + std::to_string(order) + " needs at least " + std::to_string(n_coef) +
                   " distinct positions, got " + std::to_string(distinct_positions(points)));

  ScoreModel model;
  model.order = order;
  const auto [lo_it, hi_it] = std::minmax_element(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.position < b.position;
  });
  model.range_lo = lo_it->position;
  model.range_hi = hi_it->position;

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(n_coef));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = model.normalize(points[static_cast<std::size_t>(i)].position);
    double pw = 1.0;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n_coef); ++k) {
      basis(i, k) = pw;
      pw *= t;
    }
    y(i) = points[static_cast<std::size_t>(i)].value;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < static_cast<Eigen::Index>(n_coef)) throw FitError("rank-deficient least-squares system");
  const Eigen::VectorXd coef = qr.solve(y);
  model.coefficients.assign(coef.data(), coef.data() + coef.size());

  const Eigen::VectorXd residual = y - basis * coef;
  model.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  std::vector<double> values(points.size());
  std::transform(points.begin(), points.end(), values.begin(), [](const auto& pt) { return pt.value; });
  model.data_std = stddev_of(values);
  return model;
}

/// Whether rmse is "sufficiently low": below half the data standard deviation.
/// Flat data (zero spread) is accepted when the fit is exact.
inline bool rmse_acceptable(double rmse, double data_std, double data_scale) {
  const double flat_tol = 1e-12 * std::max(1.0, data_scale);
  if (data_std <= flat_tol) return rmse <= flat_tol;
  return rmse < 0.5 * data_std;
}

/// Highest order select_order will try for `n_points` samples: coefficients
/// may not exceed half the number of points.
inline int order_cap(std::size_t n_points, int max_order) {
  return std::min(max_order, static_cast<int>(n_points / 2) - 1);
}

/// Smallest order in 1..cap whose rmse passes the half-std criterion;
/// otherwise the order with minimal rmse (lowest order on ties).
inline ScoreModel select_order(std::span<const ScorePoint> points, int max_order = 6) {
  const int cap = std::min(order_cap(points.size(), max_order), static_cast<int>(distinct_positions(points)) - 1);
  if (cap < 1) return polyfit(points, 0);

  double scale = 0.0;
  for (const auto& pt : points) scale = std::max(scale, std::abs(pt.value));

  std::vector<ScoreModel> tried;
  for (int order = 1; order <= cap; ++order) {
    ScoreModel m = polyfit(points, order);
    if (rmse_acceptable(m.rmse, m.data_std, scale)) return m;
    tried.push_back(std::move(m));
  }
  double best = tried.front().rmse;
  for (const auto& m : tried) best = std::min(best, m.rmse);
  for (auto& m : tried)
    if (m.rmse <= best * (1.0 + 1e-12) + 1e-300) return std::move(m);
  return std::move(tried.back());
}

}  // namespace airvc
