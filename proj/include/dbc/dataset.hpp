#pragma once

#include <vector>

#include "dbc/matrix.hpp"
#include "dbc/rng.hpp"

namespace dbc {

/// Per-dimension z-score statistics. Standard deviations are floored at
/// kStdFloor so constant dimensions normalize to zero instead of blowing up.
struct NormStats {
  Vector state_mean, state_std;
  Vector action_mean, action_std;

  bool empty() const { return state_mean.size() == 0; }
  static NormStats identity(int state_dim, int action_dim);
};

inline constexpr double kStdFloor = 1e-8;

/// Expert demonstrations as flat (state, action) pair records.
struct DemoDataset {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> traj_ids;  // per row
  std::vector<int> steps;     // per row: time index within its trajectory
  Matrix states;              // rows x state_dim
  Matrix actions;             // rows x action_dim
  NormStats stats;            // stats of the raw data (kept through normalization)
  bool normalized = false;
  double fraction_tag = 1.0;

  long rows() const { return states.rows(); }
  int trajectory_count() const;
};

NormStats compute_norm_stats(const DemoDataset& ds);

Vector apply_norm(const Vector& x, const Vector& mean, const Vector& stddev);
Vector invert_norm(const Vector& x, const Vector& mean, const Vector& stddev);
Matrix apply_norm_rows(const Matrix& x, const Vector& mean, const Vector& stddev);
Matrix invert_norm_rows(const Matrix& x, const Vector& mean, const Vector& stddev);

/// Returns a z-scored copy carrying the stats that produced it.
DemoDataset normalize_dataset(const DemoDataset& ds);

/// Keeps floor(fraction * trajectories) whole trajectories (at least one),
/// chosen by a seeded shuffle of trajectory ids.
DemoDataset subsample_fraction(const DemoDataset& ds, double fraction, Rng& rng);

/// States and actions side by side (the diffusion model's joint data).
Matrix concat_state_action(const Matrix& states, const Matrix& actions);

}  // namespace dbc
