#include "dbc/dbc_losses.hpp"

#include <cmath>

#include "dbc/adam.hpp"
#include "dbc/sampler.hpp"

namespace dbc {

double bc_loss(const Matrix& predicted_actions, const Matrix& target_actions, Matrix* grad) {
  require_same_shape(predicted_actions, target_actions, "bc_loss");
  const Matrix diff = predicted_actions - target_actions;
  if (grad != nullptr) {
    *grad = (2.0 / static_cast<double>(diff.size())) * diff;
  }
  return diff.array().square().mean();
}

AgentDiffLoss agent_diff_loss(const NoiseModel& phi, const Matrix& states,
                              const Matrix& policy_actions, int n, const Matrix& eps) {
  AgentDiffLoss out;
  out.ev = diff_loss_eval(phi, concat_state_action(states, policy_actions), n, eps);
  out.per_sample = out.ev.per_sample;
  out.loss = out.ev.loss;
  return out;
}

Matrix agent_diff_backward(const NoiseModel& phi, const AgentDiffLoss& agent,
                           const Vector& sample_weights) {
  const Matrix d_x0 = diff_loss_backward(phi, agent.ev, sample_weights, nullptr);
  return d_x0.rightCols(phi.action_dim);
}

Vector expert_diff_loss(const NoiseModel& phi, const Matrix& states, const Matrix& actions, int n,
                        const Matrix& eps) {
  return diff_loss_eval(phi, concat_state_action(states, actions), n, eps).per_sample;
}

double dm_loss(const Vector& agent_per_sample, const Vector& expert_per_sample, Vector* active) {
  if (agent_per_sample.size() != expert_per_sample.size()) {
    throw ShapeError("dm_loss: per-sample length mismatch");
  }
  const Eigen::ArrayXd gap = (agent_per_sample - expert_per_sample).array();
  if (active != nullptr) {
    *active = (gap > 0.0).cast<double>();
  }
  return gap.max(0.0).mean();
}

double total_loss(double bc, double dm, double lambda) { return bc + lambda * dm; }

namespace {

struct BatchView {
  Matrix states;
  Matrix actions;
};

void gather(const DemoDataset& ds, const std::vector<long>& idx, BatchView& b) {
  b.states.resize(static_cast<long>(idx.size()), ds.state_dim);
  b.actions.resize(static_cast<long>(idx.size()), ds.action_dim);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    b.states.row(static_cast<long>(i)) = ds.states.row(idx[i]);
    b.actions.row(static_cast<long>(i)) = ds.actions.row(idx[i]);
  }
}

Policy init_policy(const DemoDataset& ds, const TrainConfig& cfg, Rng& init_rng) {
  Policy p;
  p.state_dim = ds.state_dim;
  p.action_dim = ds.action_dim;
  p.net = make_mlp(cfg.layer_dims(ds.state_dim, ds.action_dim), cfg.activation, init_rng);
  p.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);
  return p;
}

}  // namespace

Policy train_bc(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.rows() == 0) throw ConfigError("train_bc: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Policy policy = init_policy(ds, cfg, init_rng);
  AdamState opt = make_adam(policy.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  BatchView b;
  MlpTape tape;
  Matrix grad;
  for (long it = 0; it < cfg.epochs; ++it) {
    gather(ds, batches.next(), b);
    const Matrix pred = mlp_forward(policy.net, b.states, tape);
    const double loss = bc_loss(pred, b.actions, &grad);
    if (!std::isfinite(loss)) {
      throw StateError("train_bc: non-finite loss at iteration " + std::to_string(it));
    }
    mlp_backward(policy.net, tape, grad);
    if (cfg.lr_decay) opt.lr = linearly_decayed_lr(cfg.lr, it, cfg.epochs);
    adam_step(policy.net, opt);
  }
  return policy;
}

Policy train_policy(const DemoDataset& dataset, const NoiseModel& phi, const TrainConfig& cfg,
                    Rng& rng) {
  if (cfg.lambda < 0.0) throw ConfigError("train_policy: lambda must be >= 0");
  if (!cfg.use_bc && cfg.lambda <= 0.0) {
    throw ConfigError("train_policy: nothing to optimize (use_bc off and lambda 0)");
  }
  if (dataset.rows() == 0) throw ConfigError("train_policy: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;
  if (phi.state_dim != ds.state_dim || phi.action_dim != ds.action_dim) {
    throw ShapeError("train_policy: diffusion model dims do not match dataset");
  }

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng dm_rng = rng.stream("dmnoise");

  Policy policy = init_policy(ds, cfg, init_rng);
  AdamState opt = make_adam(policy.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  const Vector phi_params_before = phi.net.params;
  BatchView b;
  MlpTape tape;
  Matrix bc_grad;
  for (long it = 0; it < cfg.epochs; ++it) {
    gather(ds, batches.next(), b);
    const Matrix pred = mlp_forward(policy.net, b.states, tape);

    double bc = 0.0;
    double dm = 0.0;
    Matrix d_action;
    if (cfg.use_bc) {
      bc = bc_loss(pred, b.actions, &bc_grad);
      d_action = bc_grad;
    } else {
      d_action = Matrix::Zero(pred.rows(), pred.cols());
    }

    if (cfg.lambda > 0.0) {
      const int n = 1 + static_cast<int>(dm_rng.next_below(phi.sched.steps));
      const Matrix eps = dm_rng.gaussian_matrix(pred.rows(), phi.data_dim());
      const AgentDiffLoss agent = agent_diff_loss(phi, b.states, pred, n, eps);
      Vector active;
      if (cfg.use_expert_normalization) {
        Vector expert;
        if (cfg.share_noise) {
          expert = expert_diff_loss(phi, b.states, b.actions, n, eps);
        } else {
          const int n2 = 1 + static_cast<int>(dm_rng.next_below(phi.sched.steps));
          const Matrix eps2 = dm_rng.gaussian_matrix(pred.rows(), phi.data_dim());
          expert = expert_diff_loss(phi, b.states, b.actions, n2, eps2);
        }
        dm = dm_loss(agent.per_sample, expert, &active);
      } else {
        dm = agent.loss;
        active = Vector::Ones(pred.rows());
      }
      d_action += cfg.lambda * agent_diff_backward(phi, agent, active);
    }

    const double loss = total_loss(bc, dm, cfg.lambda);
    if (!std::isfinite(loss)) {
      throw StateError("train_policy: non-finite loss at iteration " + std::to_string(it));
    }
    mlp_backward(policy.net, tape, d_action);
    if (cfg.lr_decay) opt.lr = linearly_decayed_lr(cfg.lr, it, cfg.epochs);
    adam_step(policy.net, opt);
  }

  if (phi.net.params != phi_params_before) {
    throw StateError("train_policy: frozen diffusion model changed");
  }
  return policy;
}

}  // namespace dbc
