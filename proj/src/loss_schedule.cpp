#include "ofm/loss_schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "ofm/csv.hpp"

namespace ofm {

CurriculumWeights curriculum_weights(long i, long l) {
  require(l >= 1, "curriculum_weights: horizon must be positive");
  require(i >= 0 && i <= l, "curriculum_weights: index outside [0, horizon]");
  double r = std::sqrt(static_cast<double>(i) / static_cast<double>(l));
  return {0.5 * r, 1.0 - r};
}

double regression_loss(const Quat& pred, const Quat& truth) {
  return geodesic_distance(pred, truth);
}

namespace {

// gradient of 2*acos(|<p,t>|) w.r.t. p, with the acos slope clamped
Vec4 geodesic_grad_wrt_first(const Quat& p, const Quat& t) {
  double d = dot(p, t);
  double sgn = d >= 0 ? 1.0 : -1.0;
  double m = std::min(std::abs(d), 1.0 - 1e-7);
  double coef = -2.0 * sgn / std::sqrt(1.0 - m * m);
  return {coef * t.w, coef * t.x, coef * t.y, coef * t.z};
}

}  // namespace

Vec4 regression_loss_grad(const Quat& pred, const Quat& truth) {
  return geodesic_grad_wrt_first(pred, truth);
}

double distance_loss(const Quat& pred_i, const Quat& pred_j, const Quat& truth_i,
                     const Quat& truth_j) {
  return std::abs(geodesic_distance(pred_i, pred_j) - geodesic_distance(truth_i, truth_j));
}

PairGrad distance_loss_grad(const Quat& pred_i, const Quat& pred_j, const Quat& truth_i,
                            const Quat& truth_j) {
  double dp = geodesic_distance(pred_i, pred_j);
  double dt = geodesic_distance(truth_i, truth_j);
  double s = dp - dt >= 0 ? 1.0 : -1.0;
  PairGrad g;
  Vec4 gi = geodesic_grad_wrt_first(pred_i, pred_j);
  Vec4 gj = geodesic_grad_wrt_first(pred_j, pred_i);
  for (int k = 0; k < 4; ++k) {
    g.gi[k] = s * gi[k];
    g.gj[k] = s * gj[k];
  }
  return g;
}

double full_loss(const std::vector<PairTerm>& pairs, const CurriculumWeights& w) {
  require(!pairs.empty(), "full_loss: empty pair batch");
  double acc = 0;
  for (const auto& p : pairs) {
    acc += w.beta1 * (regression_loss(p.pred_i, p.truth_i) +
                      regression_loss(p.pred_j, p.truth_j)) +
           w.beta2 * distance_loss(p.pred_i, p.pred_j, p.truth_i, p.truth_j);
  }
  return acc / static_cast<double>(pairs.size());
}

SchedulePoint one_cycle_at(long step, const OneCycleConfig& cfg) {
  if (cfg.total_steps < 1) throw std::invalid_argument("one_cycle_at: empty schedule");
  if (step < 0 || step >= cfg.total_steps)
    throw std::out_of_range("one_cycle_at: step outside [0, total_steps)");
  const double lr_start = cfg.lr_max / cfg.start_div;
  const double lr_final = cfg.lr_max / cfg.final_div;
  const double warm = cfg.warmup_fraction * static_cast<double>(cfg.total_steps);
  SchedulePoint p;
  if (static_cast<double>(step) < warm) {
    double u = static_cast<double>(step) / warm;
    double rise = 0.5 * (1.0 - std::cos(kPi * u));
    p.lr = lr_start + (cfg.lr_max - lr_start) * rise;
    p.momentum = cfg.momentum_high - (cfg.momentum_high - cfg.momentum_low) * rise;
  } else {
    double span = static_cast<double>(cfg.total_steps) - warm;
    double u = span > 0 ? (static_cast<double>(step) - warm) / span : 1.0;
    double fall = 0.5 * (1.0 + std::cos(kPi * u));
    p.lr = lr_final + (cfg.lr_max - lr_final) * fall;
    p.momentum = cfg.momentum_low + (cfg.momentum_high - cfg.momentum_low) * (1.0 - fall);
  }
  return p;
}

void write_schedule_csv(const std::string& path, const OneCycleConfig& cfg) {
  Csv csv;
  csv.header = {"step", "lr", "momentum", "beta1", "beta2"};
  for (long s = 0; s < cfg.total_steps; ++s) {
    SchedulePoint p = one_cycle_at(s, cfg);
    CurriculumWeights w = curriculum_weights(s, cfg.total_steps);
    csv.rows.push_back({std::to_string(s), format_g9(p.lr), format_g9(p.momentum),
                        format_g9(w.beta1), format_g9(w.beta2)});
  }
  csv.write_file(path);
}

}  // namespace ofm
