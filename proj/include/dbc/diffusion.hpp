#pragma once

#include <string>
#include <vector>

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/mlp.hpp"
#include "dbc/schedule.hpp"

namespace dbc {

/// Denoising model over concatenated (state, action) vectors. The network
/// takes the noised pair plus a time embedding and predicts the injected
/// noise. Operates in normalized data space; `stats` maps back to raw.
struct NoiseModel {
  MlpModel net;
  int state_dim = 0;
  int action_dim = 0;
  DiffusionSchedule sched;
  NormStats stats;
  double noise_level = 0.0;  // expert-action noise injected during training

  int data_dim() const { return state_dim + action_dim; }
};

NoiseModel make_noise_model(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng);

/// Forward evaluation of the noise-prediction loss on a batch of clean
/// pairs. Keeps the tape so gradients can flow to the model or the input.
struct DiffLossEval {
  double loss = 0.0;
  Vector per_sample;  // mean squared residual per row
  int noise_level = 0;
  Matrix residual;  // predicted minus injected noise
  MlpTape tape;
};

DiffLossEval diff_loss_eval(const NoiseModel& phi, const Matrix& x0, int n, const Matrix& eps);

/// Gradient of (1/rows) sum_i w_i * per_sample_i with respect to x0.
/// Accumulates parameter gradients into *param_grads when non-null; pass
/// nullptr to keep the model frozen. Empty weights mean all ones.
Matrix diff_loss_backward(const NoiseModel& phi, const DiffLossEval& ev,
                          const Vector& sample_weights, Vector* param_grads);

/// Training-path loss: evaluates and accumulates parameter gradients.
double diff_loss(NoiseModel& phi, const Matrix& x0, int n, const Matrix& eps);

/// DDPM training over the dataset's (state, action) pairs.
NoiseModel train_diffusion(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng);

/// Ancestral sampling; returns raw-space (state, action) rows.
Matrix sample(const NoiseModel& phi, long count, Rng& rng);

/// Reverse chain from x at noise level from_level down to 0 with sigma
/// forced to zero; a pure function of (model, x, from_level).
Matrix denoise_deterministic(const NoiseModel& phi, Matrix x, int from_level);

/// Noises every expert pair to n = N/2, denoises back deterministically
/// and returns the mean squared action-slice error in raw units.
double reconstruction_mse(const NoiseModel& phi, const DemoDataset& expert, Rng& rng);

struct GradientFieldSpec {
  int dim_x = 0;  // data-space column indices (states then actions)
  int dim_y = 1;
  int nx = 20;
  int ny = 20;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
};

struct FieldRow {
  double x, y, dx, dy;
};

/// Denoising directions (negated predicted noise) over a 2-D grid; the
/// remaining coordinates are pinned at fixed_point (raw space).
std::vector<FieldRow> gradient_field(const NoiseModel& phi, const GradientFieldSpec& spec, int n,
                                     const Vector& fixed_point);

/// CSV export: header x,y,dx,dy with 6 significant digits.
std::string gradient_field_csv(const std::vector<FieldRow>& rows);

}  // namespace dbc
