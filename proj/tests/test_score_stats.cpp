#include <gtest/gtest.h>

#include <random>

#include "airvc/score_stats.hpp"
#include "support/oracles.hpp"

namespace airvc {
namespace {

std::vector<ScorePoint> sample(const std::vector<double>& ps, auto fn) {
  std::vector<ScorePoint> out;
  for (double p : ps) out.push_back({p, fn(p)});
  return out;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

TEST(IqrFilter, DropsFarOutlier) {
  const std::vector<double> v{1, 2, 3, 4, 100};
  const auto f = iqr_fences(v);
  EXPECT_DOUBLE_EQ(f.q1, oracle::quantile(v, 0.25));
  EXPECT_DOUBLE_EQ(f.q3, oracle::quantile(v, 0.75));
  EXPECT_DOUBLE_EQ(f.q1, 2.0);
  EXPECT_DOUBLE_EQ(f.q3, 4.0);
  EXPECT_DOUBLE_EQ(f.lower, -1.0);
  EXPECT_DOUBLE_EQ(f.upper, 7.0);
  EXPECT_EQ(iqr_filter(v), (std::vector<double>{1, 2, 3, 4}));
}

TEST(IqrFilter, ConstantAndSingleton) {
  EXPECT_EQ(iqr_filter(std::vector<double>{5, 5, 5, 5}), (std::vector<double>{5, 5, 5, 5}));
  EXPECT_EQ(iqr_filter(std::vector<double>{3}), (std::vector<double>{3}));
  EXPECT_TRUE(iqr_filter(std::vector<double>{}).empty());
}

TEST(IqrFilter, PreservesOrderAndIsSubMultiset) {
  std::mt19937_64 rng(1);
  std::lognormal_distribution<double> d(0, 1);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> v(1 + it);
    for (auto& x : v) x = d(rng);
    const auto kept = iqr_filter(v);
    // Order-preserving subsequence.
    std::size_t j = 0;
    for (double x : v)
      if (j < kept.size() && kept[j] == x) ++j;
    EXPECT_EQ(j, kept.size());
    // A second pass removes nothing when the first removed nothing.
    if (kept.size() == v.size()) { EXPECT_EQ(iqr_filter(kept), kept); }
  }
}

TEST(Polyfit, RecoversLine) {
  const auto pts = sample(grid(0, 500, 40), [](double p) { return 2 + 3 * p; });
  const auto m = polyfit(pts, 1);
  const auto raw = m.raw_coefficients();
  EXPECT_NEAR(raw[0], 2.0, 1e-9);
  EXPECT_NEAR(raw[1], 3.0, 1e-9);
  EXPECT_LT(m.rmse, 1e-9);
  EXPECT_NEAR(m.evaluate(4), 14.0, 1e-9);
}

TEST(Polyfit, ConstantData) {
  const auto pts = sample(grid(0, 500, 40), [](double) { return 0.7; });
  for (int order = 0; order <= 4; ++order) {
    const auto m = polyfit(pts, order);
    EXPECT_NEAR(m.coefficients[0], 0.7, 1e-12);
    for (int k = 1; k <= order; ++k) EXPECT_NEAR(m.coefficients[static_cast<std::size_t>(k)], 0.0, 1e-12);
  }
}

TEST(Polyfit, NoisyParabolaAgainstNormalEquations) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0, 0.01);
  const auto ps = grid(0, 400, 50);
  const auto pts = sample(ps, [&](double p) { return 0.9 - 0.001 * (p - 200) * (p - 200) + noise(rng); });
  const auto m = polyfit(pts, 2);
  EXPECT_GE(m.rmse, 0.005);
  EXPECT_LE(m.rmse, 0.02);

  std::vector<double> t, y;
  for (const auto& pt : pts) {
    t.push_back(m.normalize(pt.position));
    y.push_back(pt.value);
  }
  const auto ref = oracle::normal_equations_fit(t, y, 2);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(m.coefficients[k], ref[k], 1e-9);

  int argmax = 0;
  for (int p = 0; p <= 400; ++p)
    if (m.evaluate(p) > m.evaluate(argmax)) argmax = p;
  EXPECT_NEAR(argmax, 200, 10);
}

TEST(Polyfit, ResidualIsOrthogonalToBasis) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ScorePoint> pts;
  for (int i = 0; i < 80; ++i) pts.push_back({u(rng) * 960, u(rng)});
  for (int order = 0; order <= 6; ++order) {
    const auto m = polyfit(pts, order);
    for (int k = 0; k <= order; ++k) {
      double dot = 0.0;
      for (const auto& pt : pts) dot += std::pow(m.normalize(pt.position), k) * (pt.value - m.evaluate(pt.position));
      EXPECT_NEAR(dot, 0.0, 1e-6) << "order " << order << " column " << k;
    }
  }
}

TEST(Polyfit, Errors) {
  const std::vector<ScorePoint> two{{1, 1}, {2, 2}};
  EXPECT_THROW(polyfit(two, 2), FitError);
  const std::vector<ScorePoint> same{{3, 1}, {3, 2}, {3, 4}};
  EXPECT_THROW(polyfit(same, 1), FitError);
  EXPECT_NO_THROW(polyfit(same, 0));
}

TEST(SelectOrder, LinearDataPicksOrderOne) {
  const auto pts = sample(grid(0, 500, 60), [](double p) { return 0.2 + 0.001 * p; });
  EXPECT_EQ(select_order(pts, 6).order, 1);
}

TEST(SelectOrder, CubicNeedsOrderThree) {
  // Odd cubic with its linear part removed: orders 1 and 2 explain nothing.
  const auto pts = sample(grid(0, 100, 41), [](double p) {
    const double t = (p - 50) / 50;
    return t * t * t - 0.6 * t;
  });
  const double std = stddev_of([&] {
    std::vector<double> v;
    for (const auto& pt : pts) v.push_back(pt.value);
    return v;
  }());
  std::vector<double> t, y;
  for (const auto& pt : pts) {
    t.push_back((pt.position - 50) / 50);
    y.push_back(pt.value);
  }
  for (int order : {1, 2}) {
    const auto c = oracle::normal_equations_fit(t, y, order);
    double ss = 0;
    for (std::size_t i = 0; i < t.size(); ++i) ss += std::pow(y[i] - oracle::naive_poly(c, t[i]), 2);
    EXPECT_GE(std::sqrt(ss / t.size()), 0.5 * std) << "oracle order " << order;
  }
  const auto m = select_order(pts, 6);
  EXPECT_EQ(m.order, 3);
  EXPECT_LT(m.rmse, 1e-9);
}

TEST(SelectOrder, WhiteNoiseFallsBackToMinimalRmse) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.5, 0.1);
  std::vector<ScorePoint> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({static_cast<double>(i * 8), n(rng)});
  double best = 1e300;
  int best_order = 0;
  for (int order = 1; order <= 6; ++order) {
    const auto m = polyfit(pts, order);
    EXPECT_GE(m.rmse, 0.5 * m.data_std) << "criterion unexpectedly met at order " << order;
    if (m.rmse < best) {
      best = m.rmse;
      best_order = order;
    }
  }
  const auto m = select_order(pts, 6);
  EXPECT_LE(m.order, 6);
  EXPECT_EQ(m.order, best_order);
}

TEST(SelectOrder, RmseNoWorseThanLowerOrders) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 0.02);
  for (int it = 0; it < 30; ++it) {
    const double peak = 100 + 10 * it;
    const auto pts = sample(grid(0, 540, 120), [&](double p) { return 0.9 - 1e-6 * (p - peak) * (p - peak) + n(rng); });
    const auto m = select_order(pts, 6);
    for (int lower = 1; lower < m.order; ++lower) EXPECT_LE(m.rmse, polyfit(pts, lower).rmse);
  }
}

TEST(SelectOrder, CoefficientCountCappedAtHalfThePoints) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  for (int npts = 2; npts <= 16; ++npts) {
    std::vector<ScorePoint> pts;
    for (int i = 0; i < npts; ++i) pts.push_back({static_cast<double>(i), n(rng)});
    const auto m = select_order(pts, 6);
    EXPECT_LE(2 * (m.order + 1), std::max(2, npts)) << npts << " points";
  }
}

TEST(SelectOrder, ConstantDataGivesFlatModel) {
  const auto pts = sample(grid(0, 540, 100), [](double) { return 0.8; });
  const auto m = select_order(pts, 6);
  EXPECT_EQ(m.order, 1);
  for (int p = 0; p < 540; p += 37) EXPECT_NEAR(m.evaluate(p), 0.8, 1e-12);
}

TEST(Evaluate, MatchesNaivePowerSum) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int it = 0; it < 20; ++it) {
    ScoreModel m;
    m.order = 4;
    for (int k = 0; k < 5; ++k) m.coefficients.push_back(u(rng));
    m.range_lo = 50 + 100 * (u(rng) + 1);
    m.range_hi = m.range_lo + 300;
    for (int k = 0; k < 100; ++k) {
      const double p = m.range_lo + (m.range_hi - m.range_lo) * (u(rng) + 1) / 2;
      EXPECT_NEAR(m.evaluate(p), oracle::naive_poly(m.coefficients, m.normalize(p)), 1e-9);
    }
  }
}

TEST(Evaluate, MidpointIsConstantTerm) {
  ScoreModel m{{0.3, 0.7, -0.2, 0.05}, 3, 0, 0, 100, 300};
  EXPECT_DOUBLE_EQ(m.evaluate(200), 0.3);
  EXPECT_FALSE(m.in_range(301));
}

TEST(ScoreModelJson, RoundTrip) {
  ScoreModel m{{0.3, 0.7, -0.2}, 2, 0.01, 0.1, 12, 500};
  EXPECT_EQ(score_model_from_json(to_json(m)), m);
  auto bad = to_json(m);
  bad["order"] = 5;
  EXPECT_THROW(score_model_from_json(bad), FormatError);
}

}  // namespace
}  // namespace airvc
