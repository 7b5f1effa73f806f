// Simulates a three-lane road, calibrates on the first 70% of frames and
// counts on the remaining 30%.
//
//   ./basic_pipeline [seed]

#include <cstdlib>
#include <iostream>

#include "airvc/airvc.hpp"

int main(int argc, char** argv) {
  using namespace airvc;

  sim::SceneSpec spec;
  spec.geometry = {960, 540, 25.0};
  spec.duration = 1500;
  spec.lanes = {{300, 1}, {480, 1}, {660, 1}};
  spec.spawn_rate = 0.25;
  spec.speed_min = 4.0;
  spec.speed_max = 7.0;
  spec.width0 = 40;
  spec.width_slope = 0.11;
  spec.height0 = 30;
  spec.height_slope = 0.08;
  spec.score_profile.polynomial.clear();
  spec.score_profile.points = {{0, 0.45}, {300, 0.85}, {540, 0.70}};
  spec.score_noise = 0.05;
  spec.false_positive_rate = 0.1;
  spec.miss_rate = 0.02;
  spec.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;

  const auto scene = sim::generate(spec);
  const auto [est_seg, pred_seg] = split(scene.dataset);

  EstimationTrace trace;
  const auto est = run_estimation(est_seg, {}, &trace);
  const auto count = run_prediction(pred_seg, est);
  const auto truth = sim::crossings_in(scene.truth, est.cl_o.position, pred_seg);

  std::cout << "flow       " << to_string(est.flow.axis) << " / " << to_string(est.flow.direction) << '\n'
            << "hddr       [" << est.hddr.lo << ", " << est.hddr.hi << "]\n"
            << "cl_o       " << est.cl_o.position << '\n'
            << "roi        y=" << est.roi.y << " h=" << est.roi.height << " (H_ave " << est.average_extent << ")\n"
            << "thr_o      " << est.thr_o << '\n'
            << "orders     D_s " << est.models.detection.order << ", T_s " << est.models.tracking.order << '\n'
            << "count      " << count.count << " / truth " << truth << '\n';
  if (truth > 0) std::cout << "accuracy   " << counting_accuracy(count.count, truth) << "%\n";
  return 0;
}
