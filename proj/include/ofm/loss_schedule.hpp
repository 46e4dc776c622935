#pragma once

// Training objective and schedules: geodesic regression loss, pairwise
// distance-consistency loss, the curriculum that blends them, and the
// one-cycle learning-rate/momentum policy.

#include <cstdint>
#include <string>
#include <vector>

#include "ofm/rep_heads.hpp"
#include "ofm/so3.hpp"

namespace ofm {

// beta1 = sqrt(i/l) / 2, beta2 = 1 - sqrt(i/l); i counts completed units of
// a curriculum of length l. Early on only the relative (distance) term
// matters, by the end the absolute pose term carries half weight.
struct CurriculumWeights {
  double beta1 = 0, beta2 = 1;
};
CurriculumWeights curriculum_weights(long i, long l);

double regression_loss(const Quat& pred, const Quat& truth);
// d/dpred of regression_loss for the *returned* pred sign. |<pred,truth>| is
// clamped to 1 - 1e-7 before the acos derivative so the gradient stays
// bounded near zero distance.
Vec4 regression_loss_grad(const Quat& pred, const Quat& truth);

// | d(pred_i, pred_j) - d(truth_i, truth_j) |
double distance_loss(const Quat& pred_i, const Quat& pred_j, const Quat& truth_i,
                     const Quat& truth_j);
struct PairGrad {
  Vec4 gi{}, gj{};
};
PairGrad distance_loss_grad(const Quat& pred_i, const Quat& pred_j, const Quat& truth_i,
                            const Quat& truth_j);

struct PairTerm {
  Quat pred_i, pred_j, truth_i, truth_j;
};
// Mean over pairs of beta1 * (regression_i + regression_j) + beta2 * distance.
double full_loss(const std::vector<PairTerm>& pairs, const CurriculumWeights& w);

// One-cycle policy: cosine ramp lr_max/25 -> lr_max over the warmup fraction
// of steps, cosine decay to lr_max/1e4 afterwards; momentum mirrors the lr
// between 0.95 and 0.85.
struct OneCycleConfig {
  long total_steps = 1;
  double lr_max = 1e-3;
  double warmup_fraction = 0.3;
  double start_div = 25.0;
  double final_div = 1e4;
  double momentum_high = 0.95;
  double momentum_low = 0.85;
};
struct SchedulePoint {
  double lr = 0, momentum = 0;
};
// step must lie in [0, total_steps); throws std::out_of_range otherwise.
SchedulePoint one_cycle_at(long step, const OneCycleConfig& cfg);

// Full per-step dump (columns step,lr,momentum,beta1,beta2; curriculum
// indexed by step over the same horizon).
void write_schedule_csv(const std::string& path, const OneCycleConfig& cfg);

}  // namespace ofm
