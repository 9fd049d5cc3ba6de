#include "dbc/diffusion_policy.hpp"

#include <cmath>

#include "dbc/adam.hpp"
#include "dbc/sampler.hpp"

namespace dbc {

CondDiffusionPolicy train_diffusion_policy(const DemoDataset& dataset, const TrainConfig& cfg,
                                           Rng& rng) {
  if (dataset.rows() == 0) throw ConfigError("train_diffusion_policy: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng noise_rng = rng.stream("noise");

  CondDiffusionPolicy dp;
  dp.state_dim = ds.state_dim;
  dp.action_dim = ds.action_dim;
  dp.sched = make_schedule(cfg.n_steps, cfg.beta_start, cfg.beta_end);
  dp.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);
  dp.net = make_mlp(
      cfg.layer_dims(ds.state_dim + ds.action_dim + kTimeEmbedDim, ds.action_dim),
      cfg.activation, init_rng);

  AdamState opt = make_adam(dp.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  MlpTape tape;
  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    const long b = static_cast<long>(idx.size());
    Matrix s(b, ds.state_dim), a(b, ds.action_dim);
    for (long i = 0; i < b; ++i) {
      s.row(i) = ds.states.row(idx[static_cast<std::size_t>(i)]);
      a.row(i) = ds.actions.row(idx[static_cast<std::size_t>(i)]);
    }
    const int n = 1 + static_cast<int>(noise_rng.next_below(dp.sched.steps));
    const Matrix eps = noise_rng.gaussian_matrix(b, ds.action_dim);
    const Matrix a_n = forward_noise(a, n, eps, dp.sched);
    const Matrix input = with_time_embedding(concat_state_action(s, a_n), n, dp.sched.steps);
    const Matrix pred = mlp_forward(dp.net, input, tape);
    const Matrix resid = pred - eps;
    const double loss = resid.array().square().mean();
    if (!std::isfinite(loss)) {
      throw StateError("train_diffusion_policy: non-finite loss at iteration " +
                       std::to_string(it));
    }
    mlp_backward(dp.net, tape, (2.0 / static_cast<double>(resid.size())) * resid);
    if (cfg.lr_decay) opt.lr = linearly_decayed_lr(cfg.lr, it, cfg.epochs);
    adam_step(dp.net, opt);
  }
  return dp;
}

Vector act_diffusion_policy(const CondDiffusionPolicy& dp, const Vector& state, Rng& rng,
                            double noise_scale) {
  if (state.size() != dp.state_dim) {
    throw ShapeError("act_diffusion_policy: state dimension mismatch");
  }
  const Matrix s =
      apply_norm(state, dp.stats.state_mean, dp.stats.state_std).transpose();
  Matrix a = rng.gaussian_matrix(1, dp.action_dim);
  for (int n = dp.sched.steps; n >= 1; --n) {
    const Matrix input = with_time_embedding(concat_state_action(s, a), n, dp.sched.steps);
    const Matrix eps_hat = mlp_apply(dp.net, input);
    const double alpha = dp.sched.alpha(n - 1);
    const double abar = dp.sched.alpha_bar(n - 1);
    a = (a - ((1.0 - alpha) / std::sqrt(1.0 - abar)) * eps_hat) / std::sqrt(alpha);
    if (n > 1 && noise_scale > 0.0) {
      a += (noise_scale * dp.sched.sigma(n - 1)) * rng.gaussian_matrix(1, dp.action_dim);
    }
  }
  return invert_norm(a.row(0).transpose(), dp.stats.action_mean, dp.stats.action_std);
}

}  // namespace dbc
