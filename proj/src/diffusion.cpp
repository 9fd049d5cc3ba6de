#include "dbc/diffusion.hpp"

#include <cmath>
#include <cstdio>

#include "dbc/adam.hpp"
#include "dbc/sampler.hpp"

namespace dbc {

NoiseModel make_noise_model(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng) {
  NoiseModel phi;
  phi.state_dim = state_dim;
  phi.action_dim = action_dim;
  const int d = state_dim + action_dim;
  phi.net = make_mlp(cfg.layer_dims(d + kTimeEmbedDim, d), cfg.activation, rng);
  phi.sched = make_schedule(cfg.n_steps, cfg.beta_start, cfg.beta_end);
  phi.stats = NormStats::identity(state_dim, action_dim);
  phi.noise_level = cfg.noise_level;
  return phi;
}

DiffLossEval diff_loss_eval(const NoiseModel& phi, const Matrix& x0, int n, const Matrix& eps) {
  require_cols(x0, phi.data_dim(), "diff_loss x0");
  require_same_shape(x0, eps, "diff_loss eps");
  DiffLossEval ev;
  ev.noise_level = n;
  const Matrix xn = forward_noise(x0, n, eps, phi.sched);
  const Matrix input = with_time_embedding(xn, n, phi.sched.steps);
  const Matrix pred = mlp_forward(phi.net, input, ev.tape);
  ev.residual = pred - eps;
  ev.per_sample = ev.residual.array().square().rowwise().mean();
  ev.loss = ev.per_sample.mean();
  return ev;
}

Matrix diff_loss_backward(const NoiseModel& phi, const DiffLossEval& ev,
                          const Vector& sample_weights, Vector* param_grads) {
  const double rows = static_cast<double>(ev.residual.rows());
  const double dims = static_cast<double>(ev.residual.cols());
  Matrix d_pred = (2.0 / (rows * dims)) * ev.residual;
  if (sample_weights.size() != 0) {
    if (sample_weights.size() != ev.residual.rows()) {
      throw ShapeError("diff_loss_backward: weight length mismatch");
    }
    d_pred.array().colwise() *= sample_weights.array();
  }
  const Matrix d_input = mlp_backward(phi.net, ev.tape, d_pred, param_grads);
  const double scale = std::sqrt(phi.sched.alpha_bar(ev.noise_level - 1));
  return scale * d_input.leftCols(phi.data_dim());
}

double diff_loss(NoiseModel& phi, const Matrix& x0, int n, const Matrix& eps) {
  DiffLossEval ev = diff_loss_eval(phi, x0, n, eps);
  diff_loss_backward(phi, ev, Vector(), &phi.net.grads);
  return ev.loss;
}

NoiseModel train_diffusion(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.rows() == 0) {
    throw ConfigError("train_diffusion: empty dataset");
  }
  DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng noise_rng = rng.stream("noise");

  NoiseModel phi = make_noise_model(ds.state_dim, ds.action_dim, cfg, init_rng);
  phi.stats = cfg.normalize_data ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);

  if (cfg.noise_level > 0.0) {
    // Injected in raw action units; dividing by the per-dim std keeps the
    // raw-space level after normalization.
    Rng inject_rng = rng.stream("inject");
    Matrix eta = inject_rng.gaussian_matrix(ds.rows(), ds.action_dim);
    for (int j = 0; j < ds.action_dim; ++j) {
      const double scale =
          cfg.normalize_data ? cfg.noise_level / phi.stats.action_std(j) : cfg.noise_level;
      ds.actions.col(j) += scale * eta.col(j);
    }
  }

  const Matrix joint = concat_state_action(ds.states, ds.actions);
  AdamState opt = make_adam(phi.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);
  Matrix x0(std::min<long>(cfg.batch, ds.rows()), phi.data_dim());

  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x0.row(static_cast<long>(i)) = joint.row(idx[i]);
    }
    const int n = 1 + static_cast<int>(noise_rng.next_below(phi.sched.steps));
    const Matrix eps = noise_rng.gaussian_matrix(x0.rows(), x0.cols());
    const double loss = diff_loss(phi, x0, n, eps);
    if (!std::isfinite(loss)) {
      throw StateError("train_diffusion: non-finite loss at iteration " + std::to_string(it));
    }
    if (cfg.lr_decay) opt.lr = linearly_decayed_lr(cfg.lr, it, cfg.epochs);
    adam_step(phi.net, opt);
  }
  return phi;
}

namespace {

// One reverse step x_{n-1} from x_n; noise_scale 0 makes it deterministic.
Matrix reverse_step(const NoiseModel& phi, const Matrix& x, int n, double noise_scale, Rng& rng) {
  const Matrix input = with_time_embedding(x, n, phi.sched.steps);
  const Matrix eps_hat = mlp_apply(phi.net, input);
  const double a = phi.sched.alpha(n - 1);
  const double abar = phi.sched.alpha_bar(n - 1);
  Matrix out = (x - ((1.0 - a) / std::sqrt(1.0 - abar)) * eps_hat) / std::sqrt(a);
  if (noise_scale > 0.0) {
    out += (noise_scale * phi.sched.sigma(n - 1)) * rng.gaussian_matrix(x.rows(), x.cols());
  }
  return out;
}

}  // namespace

Matrix sample(const NoiseModel& phi, long count, Rng& rng) {
  Matrix x = rng.gaussian_matrix(count, phi.data_dim());
  for (int n = phi.sched.steps; n >= 1; --n) {
    x = reverse_step(phi, x, n, n > 1 ? 1.0 : 0.0, rng);
  }
  Matrix raw(count, phi.data_dim());
  raw.leftCols(phi.state_dim) =
      invert_norm_rows(x.leftCols(phi.state_dim), phi.stats.state_mean, phi.stats.state_std);
  raw.rightCols(phi.action_dim) =
      invert_norm_rows(x.rightCols(phi.action_dim), phi.stats.action_mean, phi.stats.action_std);
  return raw;
}

Matrix denoise_deterministic(const NoiseModel& phi, Matrix x, int from_level) {
  require_noise_level(phi.sched, from_level);
  Rng unused(0);
  for (int n = from_level; n >= 1; --n) {
    x = reverse_step(phi, x, n, 0.0, unused);
  }
  return x;
}

double reconstruction_mse(const NoiseModel& phi, const DemoDataset& expert, Rng& rng) {
  if (expert.rows() == 0) throw ConfigError("reconstruction_mse: empty dataset");
  Matrix states = apply_norm_rows(expert.states, phi.stats.state_mean, phi.stats.state_std);
  Matrix actions = apply_norm_rows(expert.actions, phi.stats.action_mean, phi.stats.action_std);
  const Matrix x0 = concat_state_action(states, actions);

  const int n_mid = std::max(1, phi.sched.steps / 2);
  const Matrix eps = rng.gaussian_matrix(x0.rows(), x0.cols());
  const Matrix x = denoise_deterministic(phi, forward_noise(x0, n_mid, eps, phi.sched), n_mid);
  const Matrix rec_actions =
      invert_norm_rows(x.rightCols(phi.action_dim), phi.stats.action_mean, phi.stats.action_std);
  return (rec_actions - expert.actions).array().square().mean();
}

std::vector<FieldRow> gradient_field(const NoiseModel& phi, const GradientFieldSpec& spec, int n,
                                     const Vector& fixed_point) {
  require_noise_level(phi.sched, n);
  const int d = phi.data_dim();
  if (spec.dim_x == spec.dim_y || spec.dim_x < 0 || spec.dim_y < 0 || spec.dim_x >= d ||
      spec.dim_y >= d) {
    throw ConfigError("gradient_field: grid needs two distinct data dimensions");
  }
  if (fixed_point.size() != d) {
    throw ShapeError("gradient_field: fixed point must have state_dim + action_dim entries");
  }
  if (spec.nx < 1 || spec.ny < 1) {
    throw ConfigError("gradient_field: grid resolution must be positive");
  }

  Vector mean(d), stddev(d);
  mean << phi.stats.state_mean, phi.stats.action_mean;
  stddev << phi.stats.state_std, phi.stats.action_std;

  std::vector<FieldRow> rows;
  rows.reserve(static_cast<std::size_t>(spec.nx) * spec.ny);
  for (int iy = 0; iy < spec.ny; ++iy) {
    for (int ix = 0; ix < spec.nx; ++ix) {
      const double gx = spec.nx == 1 ? spec.x_min
                                     : spec.x_min + (spec.x_max - spec.x_min) * ix / (spec.nx - 1);
      const double gy = spec.ny == 1 ? spec.y_min
                                     : spec.y_min + (spec.y_max - spec.y_min) * iy / (spec.ny - 1);
      Vector point = fixed_point;
      point(spec.dim_x) = gx;
      point(spec.dim_y) = gy;
      const Vector z = apply_norm(point, mean, stddev);
      const Matrix input = with_time_embedding(z.transpose(), n, phi.sched.steps);
      const Matrix eps_hat = mlp_apply(phi.net, input);
      rows.push_back({gx, gy, -eps_hat(0, spec.dim_x), -eps_hat(0, spec.dim_y)});
    }
  }
  return rows;
}

std::string gradient_field_csv(const std::vector<FieldRow>& rows) {
  std::string out = "x,y,dx,dy\n";
  char buf[160];
  for (const FieldRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g\n", r.x, r.y, r.dx, r.dy);
    out += buf;
  }
  return out;
}

}  // namespace dbc
