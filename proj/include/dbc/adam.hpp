#pragma once

#include "dbc/mlp.hpp"

namespace dbc {

struct AdamState {
  Vector m;
  Vector v;
  long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(long param_count, double lr);

/// Bias-corrected Adam update from model.grads; zeroes the gradients.
void adam_step(MlpModel& model, AdamState& state);

/// Linear decay to zero over total steps: lr0 * (1 - step/total).
double linearly_decayed_lr(double lr0, long step, long total_steps);

}  // namespace dbc
