#pragma once

#include "dbc/matrix.hpp"

namespace dbc {

inline constexpr int kTimeEmbedDim = 4;

/// Per-step noise constants of the forward/reverse diffusion chain,
/// indexed by noise level n = 1..steps (stored zero-based).
struct DiffusionSchedule {
  int steps = 0;          // N
  Vector beta;            // beta_n
  Vector alpha;           // 1 - beta_n
  Vector alpha_bar;       // prod_{k<=n} alpha_k
  Vector sigma;           // sqrt(beta_n)

  double beta_start() const { return beta(0); }
  double beta_end() const { return beta(steps - 1); }
};

/// Linear beta interpolation from beta_start to beta_end over n_steps.
DiffusionSchedule make_schedule(int n_steps, double beta_start, double beta_end);

void require_noise_level(const DiffusionSchedule& sched, int n);

/// Closed-form forward noising x_n = sqrt(abar_n) x0 + sqrt(1-abar_n) eps.
Matrix forward_noise(const Matrix& x0, int n, const Matrix& eps, const DiffusionSchedule& sched);

/// 4-dim sinusoidal embedding of n/N appended to the denoiser input.
Eigen::RowVector4d time_embedding(int n, int n_total);

/// Input batch for the denoiser: x_n columns followed by the embedding.
Matrix with_time_embedding(const Matrix& x, int n, int n_total);

}  // namespace dbc
