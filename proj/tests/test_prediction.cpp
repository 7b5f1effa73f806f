#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "airvc/prediction.hpp"
#include "airvc/simulator.hpp"
#include "support/scenes.hpp"

namespace airvc {
namespace {

Detection box(double cx, double cy, double score = 0.9) {
  Detection d;
  d.cx = cx;
  d.cy = cy;
  d.w = 40;
  d.h = 30;
  d.score = score;
  return d;
}

const FrameGeometry kFrame{960, 540, 25.0};
const CountingLine kLine{Axis::Vertical, 100};

/// One track, one observation per frame, at the given signed distances from kLine.
std::vector<TrackedFrame> walk(std::vector<double> offsets, std::int64_t id = 1, bool confirmed = true) {
  std::vector<TrackedFrame> frames;
  for (std::size_t i = 0; i < offsets.size(); ++i)
    frames.push_back({static_cast<int>(i), {{id, confirmed, box(300, 100 + offsets[i])}}});
  return frames;
}

EstimationResult calibration() {
  EstimationResult e;
  e.geometry = kFrame;
  e.flow = {Axis::Vertical, Direction::Positive};
  e.cl_o = {Axis::Vertical, 300};
  e.roi = {0, 250, 960, 100};
  e.thr_o = 0.5;
  return e;
}

SequenceDataset one_vehicle(double score = 0.9) {
  SequenceDataset ds{kFrame, {}, 1};
  for (int f = 0; f < 40; ++f) {
    Detection d = box(480, 180 + 6.0 * f, score);
    d.frame = f;
    ds.frames.push_back({f, {d}});
  }
  return ds;
}

TEST(FilterToRoi, CenterAndScoreGate) {
  const RoiRect roi{0, 250, 960, 100};
  const std::vector<Detection> dets{box(10, 250), box(10, 349.5), box(10, 350), box(10, 249.9), box(10, 300, 0.49),
                                    box(10, 300, 0.5)};
  const auto kept = filter_to_roi(dets, roi, 0.5);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_DOUBLE_EQ(kept[0].cy, 250);
  EXPECT_DOUBLE_EQ(kept[1].cy, 349.5);
  EXPECT_DOUBLE_EQ(kept[2].score, 0.5);
}

TEST(FilterToRoi, ResultIsASubsetInOrder) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> x(0, 960), y(0, 540), s(0, 1);
  std::vector<Detection> dets;
  for (int i = 0; i < 500; ++i) dets.push_back(box(x(rng), y(rng), s(rng)));
  const RoiRect roi{0, 200, 960, 120};
  const auto kept = filter_to_roi(dets, roi, 0.4);
  std::size_t j = 0;
  for (const auto& d : dets)
    if (j < kept.size() && kept[j] == d) ++j;
  EXPECT_EQ(j, kept.size());
  for (const auto& d : kept) {
    EXPECT_TRUE(roi.contains(d.cx, d.cy));
    EXPECT_GE(d.score, 0.4);
  }
}

TEST(CountCrossings, SignChange) {
  const auto r = count_crossings(walk({12, 4, -3}), kLine);
  EXPECT_EQ(r.count, 1);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (CrossingEvent{2, 1, Direction::Negative}));
}

TEST(CountCrossings, OscillationCountsOnce) {
  const auto r = count_crossings(walk({5, -5, 5, -5, 5}), kLine);
  EXPECT_EQ(r.count, 1);
  EXPECT_EQ(r.events.size(), 1u);
}

TEST(CountCrossings, LandingOnTheLine) {
  EXPECT_EQ(count_crossings(walk({-4, 0, 3}), kLine).count, 1);
  EXPECT_EQ(count_crossings(walk({-4, 0, 0, 3}), kLine).events[0].frame, 3);
  EXPECT_EQ(count_crossings(walk({-4, 0, -3}), kLine).count, 0);
  EXPECT_EQ(count_crossings(walk({0, 0, 0}), kLine).count, 0);
}

TEST(CountCrossings, UnconfirmedTracksAreNotCounted) {
  EXPECT_EQ(count_crossings(walk({-4, 4}, 1, false), kLine).count, 0);
}

TEST(CountCrossings, DirectionsAreSeparated) {
  auto frames = walk({-10, -2, 6});
  const auto back = walk({10, 2, -6}, 2);
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].observations.push_back(back[i].observations[0]);
  const auto r = count_crossings(frames, kLine);
  EXPECT_EQ(r.count, 2);
  EXPECT_EQ(r.count_in(Direction::Positive), 1);
  EXPECT_EQ(r.count_in(Direction::Negative), 1);
}

TEST(CountCrossings, PrefixCountsNeverDecreaseAndStayBelowIdCount) {
  std::mt19937_64 rng(62);
  std::normal_distribution<double> step(0, 6);
  std::uniform_int_distribution<int> id(1, 12);
  std::vector<TrackedFrame> frames;
  std::map<std::int64_t, double> pos;
  for (int f = 0; f < 300; ++f) {
    TrackedFrame tf{f, {}};
    for (int k = 0; k < 4; ++k) {
      const int i = id(rng);
      pos[i] += step(rng);
      tf.observations.push_back({i, f % 3 != 0, box(300, 100 + pos[i])});
    }
    frames.push_back(tf);
  }
  std::int64_t prev = 0;
  for (std::size_t n = 1; n <= frames.size(); n += 7) {
    const auto r = count_crossings(std::span(frames).first(n), kLine);
    EXPECT_GE(r.count, prev);
    EXPECT_LE(r.count, 12);
    EXPECT_EQ(r.count, static_cast<std::int64_t>(r.counted_ids.size()));
    prev = r.count;
  }
}

TEST(RunPrediction, SingleVehicleInsideRoi) {
  const auto r = run_prediction(one_vehicle(), calibration());
  EXPECT_EQ(r.count, 1);
  EXPECT_EQ(r.frames_processed, 40u);
  EXPECT_LT(r.detections_processed, 40u);
  EXPECT_EQ(r.events[0].direction, Direction::Positive);
  const auto full = run_prediction(one_vehicle(), calibration(), {.use_roi = false});
  EXPECT_EQ(full.count, 1);
  EXPECT_EQ(full.detections_processed, 40u);
}

TEST(RunPrediction, EmptySegment) {
  SequenceDataset ds{kFrame, {{0, {}}, {1, {}}}, std::nullopt};
  const auto r = run_prediction(ds, calibration());
  EXPECT_EQ(r.count, 0);
  EXPECT_EQ(r.frames_processed, 2u);
  EXPECT_TRUE(r.events.empty());
}

TEST(RunPrediction, EverythingBelowThreshold) {
  const auto r = run_prediction(one_vehicle(0.3), calibration());
  EXPECT_EQ(r.count, 0);
  EXPECT_EQ(r.detections_processed, 0u);
}

TEST(RunPrediction, GeometryMismatchIsAConfigError) {
  auto ds = one_vehicle();
  ds.geometry = {1280, 720, std::nullopt};
  EXPECT_THROW(run_prediction(ds, calibration()), ConfigError);
}

TEST(RunPrediction, RoiArmSeesASubsetOfDetections) {
  const auto scene = sim::generate(testing::single_road(4));
  const auto [est_part, pred_part] = split(scene.dataset);
  const auto est = run_estimation(est_part);
  const auto roi = run_prediction(pred_part, est);
  const auto full = run_prediction(pred_part, est, {.use_roi = false});
  EXPECT_LE(roi.detections_processed, full.detections_processed);
  EXPECT_EQ(roi.frames_processed, full.frames_processed);
}

TEST(Accuracy, Examples) {
  EXPECT_DOUBLE_EQ(counting_accuracy(100, 100), 100.0);
  EXPECT_DOUBLE_EQ(counting_accuracy(98, 100), 98.0);
  EXPECT_DOUBLE_EQ(counting_accuracy(108, 100), 92.0);
  EXPECT_DOUBLE_EQ(counting_accuracy(250, 100), 0.0);
  EXPECT_DOUBLE_EQ(counting_accuracy(0, 7), 0.0);
  EXPECT_THROW(counting_accuracy(3, 0), DomainError);
}

TEST(SpeedImprovement, Examples) {
  EXPECT_DOUBLE_EQ(speed_improvement(52, 26), 100.0);
  EXPECT_DOUBLE_EQ(speed_improvement(26, 26), 0.0);
  EXPECT_NEAR(speed_improvement(115, 26), 342.3077, 1e-4);
  EXPECT_DOUBLE_EQ(speed_improvement(13, 26), -50.0);
  EXPECT_THROW(speed_improvement(10, 0), DomainError);
}

TEST(CountJson, TimingIsOptional) {
  const auto r = run_prediction(one_vehicle(), calibration());
  const auto with = to_json(r);
  const auto without = to_json(r, false);
  EXPECT_TRUE(with.contains("timing"));
  EXPECT_FALSE(without.contains("timing"));
  EXPECT_EQ(without.at("count"), 1);
  EXPECT_EQ(without.at("count_positive"), 1);
}

TEST(EventsCsv, OneRowPerEvent) {
  std::ostringstream os;
  write_events_csv(os, count_crossings(walk({12, 4, -3}), kLine));
  EXPECT_EQ(os.str(), "frame,track_id,direction\n2,1,negative\n");
}

}  // namespace
}  // namespace airvc
