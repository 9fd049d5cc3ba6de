#include "dbc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dbc {

NormStats NormStats::identity(int state_dim, int action_dim) {
  NormStats s;
  s.state_mean = Vector::Zero(state_dim);
  s.state_std = Vector::Ones(state_dim);
  s.action_mean = Vector::Zero(action_dim);
  s.action_std = Vector::Ones(action_dim);
  return s;
}

int DemoDataset::trajectory_count() const {
  std::set<int> ids(traj_ids.begin(), traj_ids.end());
  return static_cast<int>(ids.size());
}

namespace {

void column_stats(const Matrix& x, Vector& mean, Vector& stddev) {
  const double n = static_cast<double>(x.rows());
  mean = x.colwise().mean().transpose();
  Vector var = (x.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() / n;
  stddev = var.array().sqrt().max(kStdFloor);
}

}  // namespace

NormStats compute_norm_stats(const DemoDataset& ds) {
  if (ds.rows() == 0) {
    throw ConfigError("compute_norm_stats: empty dataset");
  }
  NormStats s;
  column_stats(ds.states, s.state_mean, s.state_std);
  column_stats(ds.actions, s.action_mean, s.action_std);
  return s;
}

Vector apply_norm(const Vector& x, const Vector& mean, const Vector& stddev) {
  if (x.size() != mean.size() || x.size() != stddev.size()) {
    throw ShapeError("apply_norm: dimension mismatch");
  }
  return (x - mean).cwiseQuotient(stddev);
}

Vector invert_norm(const Vector& x, const Vector& mean, const Vector& stddev) {
  if (x.size() != mean.size() || x.size() != stddev.size()) {
    throw ShapeError("invert_norm: dimension mismatch");
  }
  return x.cwiseProduct(stddev) + mean;
}

Matrix apply_norm_rows(const Matrix& x, const Vector& mean, const Vector& stddev) {
  require_cols(x, mean.size(), "apply_norm_rows");
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Matrix invert_norm_rows(const Matrix& x, const Vector& mean, const Vector& stddev) {
  require_cols(x, mean.size(), "invert_norm_rows");
  return (x.array().rowwise() * stddev.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

DemoDataset normalize_dataset(const DemoDataset& ds) {
  if (ds.normalized) return ds;
  DemoDataset out = ds;
  out.stats = compute_norm_stats(ds);
  out.states = apply_norm_rows(ds.states, out.stats.state_mean, out.stats.state_std);
  out.actions = apply_norm_rows(ds.actions, out.stats.action_mean, out.stats.action_std);
  out.normalized = true;
  return out;
}

DemoDataset subsample_fraction(const DemoDataset& ds, double fraction, Rng& rng) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ConfigError("fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return ds;

  std::vector<int> ids;
  for (int id : ds.traj_ids) {
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  // Fisher-Yates from the seeded stream
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(ids[i - 1], ids[j]);
  }
  std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size()))));
  std::set<int> kept(ids.begin(), ids.begin() + static_cast<long>(keep));

  DemoDataset out;
  out.state_dim = ds.state_dim;
  out.action_dim = ds.action_dim;
  out.fraction_tag = fraction;
  out.normalized = ds.normalized;
  out.stats = ds.stats;
  std::vector<long> rows;
  for (long r = 0; r < ds.rows(); ++r) {
    if (kept.count(ds.traj_ids[static_cast<std::size_t>(r)]) != 0) rows.push_back(r);
  }
  out.states.resize(static_cast<long>(rows.size()), ds.state_dim);
  out.actions.resize(static_cast<long>(rows.size()), ds.action_dim);
  out.traj_ids.reserve(rows.size());
  out.steps.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.states.row(static_cast<long>(i)) = ds.states.row(rows[i]);
    out.actions.row(static_cast<long>(i)) = ds.actions.row(rows[i]);
    out.traj_ids.push_back(ds.traj_ids[static_cast<std::size_t>(rows[i])]);
    out.steps.push_back(ds.steps[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

Matrix concat_state_action(const Matrix& states, const Matrix& actions) {
  if (states.rows() != actions.rows()) {
    throw ShapeError("concat_state_action: row mismatch");
  }
  Matrix x(states.rows(), states.cols() + actions.cols());
  x.leftCols(states.cols()) = states;
  x.rightCols(actions.cols()) = actions;
  return x;
}

}  // namespace dbc
