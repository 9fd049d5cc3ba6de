#pragma once

#include "dbc/config.hpp"
#include "dbc/diffusion.hpp"
#include "dbc/policy.hpp"

namespace dbc {

/// Mean squared error between predicted and target actions (mean over
/// batch and coordinates). Writes the gradient with respect to the
/// predictions when grad is non-null.
double bc_loss(const Matrix& predicted_actions, const Matrix& target_actions, Matrix* grad);

/// Diffusion loss on (state, action) pairs built from policy actions.
/// The tape inside `ev` lets gradients flow back into the actions while
/// the noise model stays frozen.
struct AgentDiffLoss {
  double loss = 0.0;
  Vector per_sample;
  DiffLossEval ev;
};

AgentDiffLoss agent_diff_loss(const NoiseModel& phi, const Matrix& states,
                              const Matrix& policy_actions, int n, const Matrix& eps);

/// Gradient of (1/rows) sum_i w_i * per_sample_i with respect to the
/// policy actions; phi parameters are untouched.
Matrix agent_diff_backward(const NoiseModel& phi, const AgentDiffLoss& agent,
                           const Vector& sample_weights);

/// Diffusion loss on expert pairs; values only, detached from gradients.
Vector expert_diff_loss(const NoiseModel& phi, const Matrix& states, const Matrix& actions, int n,
                        const Matrix& eps);

/// Per-sample clamped difference, mean over the batch. Fills *active with
/// 1 for samples past the clamp (their gradient weight) when non-null.
double dm_loss(const Vector& agent_per_sample, const Vector& expert_per_sample, Vector* active);

double total_loss(double bc, double dm, double lambda);

/// Behavioral cloning baseline trainer.
Policy train_bc(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng);

/// Policy trainer with frozen-diffusion-model guidance. With lambda = 0 it
/// runs the exact BC path (same streams, same arithmetic as train_bc).
Policy train_policy(const DemoDataset& dataset, const NoiseModel& phi, const TrainConfig& cfg,
                    Rng& rng);

}  // namespace dbc
