#include "dbc/schedule.hpp"

#include <cmath>
#include <numbers>

namespace dbc {

DiffusionSchedule make_schedule(int n_steps, double beta_start, double beta_end) {
  if (n_steps < 1) {
    throw ConfigError("schedule needs at least one step");
  }
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ConfigError("schedule requires 0 < beta_start <= beta_end < 1");
  }
  DiffusionSchedule s;
  s.steps = n_steps;
  s.beta.resize(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    s.beta(i) = n_steps == 1
                    ? beta_start
                    : beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                          static_cast<double>(n_steps - 1);
  }
  s.alpha = 1.0 - s.beta.array();
  s.alpha_bar.resize(n_steps);
  double prod = 1.0;
  for (int i = 0; i < n_steps; ++i) {
    prod *= s.alpha(i);
    s.alpha_bar(i) = prod;
  }
  s.sigma = s.beta.array().sqrt();
  return s;
}

void require_noise_level(const DiffusionSchedule& sched, int n) {
  if (n < 1 || n > sched.steps) {
    throw ShapeError("noise level " + std::to_string(n) + " outside 1.." +
                     std::to_string(sched.steps));
  }
}

Matrix forward_noise(const Matrix& x0, int n, const Matrix& eps, const DiffusionSchedule& sched) {
  require_noise_level(sched, n);
  require_same_shape(x0, eps, "forward_noise");
  const double abar = sched.alpha_bar(n - 1);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

Eigen::RowVector4d time_embedding(int n, int n_total) {
  const double t = static_cast<double>(n) / static_cast<double>(n_total);
  const double pi = std::numbers::pi;
  return {std::sin(pi * t), std::cos(pi * t), std::sin(2.0 * pi * t), std::cos(2.0 * pi * t)};
}

Matrix with_time_embedding(const Matrix& x, int n, int n_total) {
  Matrix out(x.rows(), x.cols() + kTimeEmbedDim);
  out.leftCols(x.cols()) = x;
  out.rightCols(kTimeEmbedDim) = time_embedding(n, n_total).replicate(x.rows(), 1);
  return out;
}

}  // namespace dbc
