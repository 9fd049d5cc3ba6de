#include "dbc/adam.hpp"

#include <cmath>

namespace dbc {

AdamState make_adam(long param_count, double lr) {
  AdamState s;
  s.m = Vector::Zero(param_count);
  s.v = Vector::Zero(param_count);
  s.lr = lr;
  return s;
}

void adam_step(MlpModel& model, AdamState& state) {
  if (state.m.size() != model.params.size() || state.v.size() != model.params.size() ||
      model.grads.size() != model.params.size()) {
    throw ShapeError("adam_step: buffer lengths do not match params");
  }
  state.step_count += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * model.grads;
  state.v = state.beta2 * state.v.array() + (1.0 - state.beta2) * model.grads.array().square();
  model.params.array() -=
      state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
  model.zero_grads();
}

double linearly_decayed_lr(double lr0, long step, long total_steps) {
  if (total_steps <= 0) return lr0;
  double f = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return f > 0.0 ? lr0 * f : 0.0;
}

}  // namespace dbc
