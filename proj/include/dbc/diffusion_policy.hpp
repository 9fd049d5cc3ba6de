#pragma once

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/schedule.hpp"

namespace dbc {

/// Conditional denoiser used directly as a policy: predicts the noise on
/// an action given the clean state, a noised action and the step embedding.
struct CondDiffusionPolicy {
  MlpModel net;  // (s, a_n, embedding) -> noise over action dims
  int state_dim = 0;
  int action_dim = 0;
  DiffusionSchedule sched;
  NormStats stats;
};

/// Noise-prediction training over actions conditioned on states.
CondDiffusionPolicy train_diffusion_policy(const DemoDataset& dataset, const TrainConfig& cfg,
                                           Rng& rng);

/// Runs the full reverse chain from a_N ~ N(0, I). noise_scale 0 makes the
/// chain deterministic given (state, a_N); the final step never adds noise.
Vector act_diffusion_policy(const CondDiffusionPolicy& dp, const Vector& state, Rng& rng,
                            double noise_scale = 1.0);

}  // namespace dbc
