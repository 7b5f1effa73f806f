#include <gtest/gtest.h>

#include <random>

#include "airvc/core.hpp"
#include "support/oracles.hpp"

namespace airvc {
namespace {

Detection box(double cx, double cy, double w, double h, double score = 0.9) {
  Detection d;
  d.cx = cx;
  d.cy = cy;
  d.w = w;
  d.h = h;
  d.score = score;
  return d;
}

const FrameGeometry kFrame{960, 540, std::nullopt};

TEST(SignedDistance, Examples) {
  EXPECT_DOUBLE_EQ(signed_distance({Axis::Vertical, 100}, box(0, 120, 10, 10)), 20.0);
  EXPECT_DOUBLE_EQ(signed_distance({Axis::Vertical, 100}, box(0, 100, 10, 10)), 0.0);
  EXPECT_DOUBLE_EQ(signed_distance({Axis::Horizontal, 50}, box(30, 0, 10, 10)), -20.0);
}

TEST(SignedDistance, ShiftingTheLineShiftsTheResult) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 500);
  std::uniform_int_distribution<int> pos(0, 500), delta(-100, 100);
  for (int i = 0; i < 200; ++i) {
    const auto det = box(u(rng), u(rng), 10, 10);
    const CountingLine line{i % 2 ? Axis::Vertical : Axis::Horizontal, pos(rng)};
    const int dl = delta(rng);
    const CountingLine moved{line.axis, line.position + dl};
    EXPECT_NEAR(signed_distance(moved, det), signed_distance(line, det) - dl, 1e-9);
  }
}

TEST(BboxSpan, CenterPlusMinusHalfExtent) {
  // Rows 90..109 are the 20 rows a 20-px box centered at 100 covers.
  EXPECT_EQ(bbox_span(box(50, 100, 40, 20), Axis::Vertical, kFrame), (Span{90, 109}));
}

TEST(BboxSpan, ClampedAtFrameEdge) {
  const FrameGeometry g{100, 100, std::nullopt};
  EXPECT_EQ(bbox_span(box(5, 50, 20, 10), Axis::Horizontal, g), (Span{0, 14}));
}

TEST(BboxSpan, UnitBoxStraddlingTwoRows) {
  // [99.5, 100.5) touches rows 99 and 100.
  EXPECT_EQ(bbox_span(box(50, 100, 10, 1), Axis::Vertical, kFrame), (Span{99, 100}));
  EXPECT_EQ(oracle::pixel_rows(100, 1, 540), (Span{99, 100}));
}

TEST(BboxSpan, OutsideFrameIsEmpty) {
  EXPECT_TRUE(bbox_span(box(50, -30, 10, 20), Axis::Vertical, kFrame).empty());
  EXPECT_TRUE(bbox_span(box(50, 600, 10, 20), Axis::Vertical, kFrame).empty());
}

TEST(BboxSpan, MatchesPixelRasterizationOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-20, 560), e(0.3, 90);
  for (int i = 0; i < 2000; ++i) {
    const double center = c(rng), extent = e(rng);
    const auto det = box(10, center, 5, extent);
    EXPECT_EQ(bbox_span(det, Axis::Vertical, kFrame), oracle::pixel_rows(center, extent, 540))
        << "center " << center << " extent " << extent;
  }
}

TEST(BboxSpan, LengthNeverExceedsFrameExtent) {
  const FrameGeometry g{64, 48, std::nullopt};
  EXPECT_EQ(bbox_span(box(30, 24, 500, 500), Axis::Vertical, g).length(), 48);
  EXPECT_EQ(bbox_span(box(30, 24, 500, 500), Axis::Horizontal, g).length(), 64);
}

TEST(RoiRect, ContainsIsHalfOpen) {
  const RoiRect roi{0, 100, 960, 99};
  EXPECT_TRUE(roi.contains(10, 100));
  EXPECT_TRUE(roi.contains(10, 198.9));
  EXPECT_FALSE(roi.contains(10, 199));
  EXPECT_FALSE(roi.contains(10, 99));
}

TEST(Names, RoundTrip) {
  for (auto a : {Axis::Vertical, Axis::Horizontal}) EXPECT_EQ(parse_axis(to_string(a)), a);
  for (auto d : {Direction::Positive, Direction::Negative, Direction::Bidirectional})
    EXPECT_EQ(parse_direction(to_string(d)), d);
  EXPECT_THROW(parse_axis("diagonal"), ConfigError);
}

}  // namespace
}  // namespace airvc
