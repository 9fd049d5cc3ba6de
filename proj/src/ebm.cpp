#include "dbc/ebm.hpp"

#include <cmath>

#include "dbc/adam.hpp"
#include "dbc/sampler.hpp"

namespace dbc {
namespace {

constexpr double kEbmLrDecay = 0.99;
constexpr long kEbmLrDecayEvery = 100;

Matrix normalize_pairs(const EnergyModel& ebm, const Matrix& states, const Matrix& actions) {
  return concat_state_action(
      apply_norm_rows(states, ebm.stats.state_mean, ebm.stats.state_std),
      apply_norm_rows(actions, ebm.stats.action_mean, ebm.stats.action_std));
}

}  // namespace

EnergyModel train_ebm(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.rows() == 0) throw ConfigError("train_ebm: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng neg_rng = rng.stream("negatives");

  EnergyModel ebm;
  ebm.state_dim = ds.state_dim;
  ebm.action_dim = ds.action_dim;
  ebm.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);
  ebm.action_lo = cfg.action_box_lo;
  ebm.action_hi = cfg.action_box_hi;
  ebm.net = make_mlp(cfg.layer_dims(ds.state_dim + ds.action_dim, 1), cfg.activation, init_rng);

  AdamState opt = make_adam(ebm.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);
  const int n_cand = 1 + cfg.n_neg;  // positive first, negatives after

  MlpTape tape;
  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    const long b = static_cast<long>(idx.size());
    Matrix x(b * n_cand, ds.state_dim + ds.action_dim);
    for (long i = 0; i < b; ++i) {
      const auto state = ds.states.row(idx[static_cast<std::size_t>(i)]);
      x.row(i * n_cand).leftCols(ds.state_dim) = state;
      x.row(i * n_cand).rightCols(ds.action_dim) =
          ds.actions.row(idx[static_cast<std::size_t>(i)]);
      for (int k = 1; k < n_cand; ++k) {
        x.row(i * n_cand + k).leftCols(ds.state_dim) = state;
        for (int j = 0; j < ds.action_dim; ++j) {
          const double raw = neg_rng.uniform(cfg.action_box_lo, cfg.action_box_hi);
          x(i * n_cand + k, ds.state_dim + j) =
              (raw - ebm.stats.action_mean(j)) / ebm.stats.action_std(j);
        }
      }
    }

    const Matrix energy = mlp_forward(ebm.net, x, tape);
    // InfoNCE with the expert pair as the positive: softmax over -E.
    Matrix d_energy(energy.rows(), 1);
    double loss = 0.0;
    for (long i = 0; i < b; ++i) {
      const auto block = energy.col(0).segment(i * n_cand, n_cand);
      const double zmax = (-block).maxCoeff();
      const Eigen::ArrayXd p = (-block.array() - zmax).exp();
      const double denom = p.sum();
      loss += std::log(denom) + zmax + block(0);
      for (int k = 0; k < n_cand; ++k) {
        const double softmax_k = p(k) / denom;
        d_energy(i * n_cand + k, 0) = -(softmax_k - (k == 0 ? 1.0 : 0.0)) / static_cast<double>(b);
      }
    }
    loss /= static_cast<double>(b);
    if (!std::isfinite(loss)) {
      throw StateError("train_ebm: non-finite loss at iteration " + std::to_string(it));
    }
    mlp_backward(ebm.net, tape, d_energy);
    opt.lr = cfg.lr * std::pow(kEbmLrDecay, static_cast<double>(it / kEbmLrDecayEvery));
    adam_step(ebm.net, opt);
  }
  return ebm;
}

Vector ebm_energy(const EnergyModel& ebm, const Matrix& states, const Matrix& actions) {
  return mlp_apply(ebm.net, normalize_pairs(ebm, states, actions)).col(0);
}

double ebm_guidance_loss(const EnergyModel& ebm, const Matrix& norm_states,
                         const Matrix& norm_actions, Matrix* grad_wrt_actions) {
  const Matrix x = concat_state_action(norm_states, norm_actions);
  MlpTape tape;
  const Matrix energy = mlp_forward(ebm.net, x, tape);
  if (grad_wrt_actions != nullptr) {
    const Matrix d_out = Matrix::Constant(energy.rows(), 1, 1.0 / energy.rows());
    const Matrix d_in = mlp_backward(ebm.net, tape, d_out, nullptr);
    *grad_wrt_actions = d_in.rightCols(ebm.action_dim);
  }
  return energy.col(0).mean();
}

namespace {

Vector softmax_neg_energy(const Vector& energy, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("ibc temperature must be > 0");
  const Eigen::ArrayXd z = -energy.array() / temperature;
  const Eigen::ArrayXd p = (z - z.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

Vector ibc_candidate_probs(const EnergyModel& ebm, const Vector& state, const Matrix& candidates,
                           double temperature) {
  const Matrix states = state.transpose().replicate(candidates.rows(), 1);
  return softmax_neg_energy(ebm_energy(ebm, states, candidates), temperature);
}

Vector act_ibc_fn(const EnergyFn& energy, int action_dim, double action_lo, double action_hi,
                  Rng& rng, int n_samples, int n_iters, double temperature) {
  if (n_samples < 1 || n_iters < 1) throw ConfigError("act_ibc needs positive samples and iters");
  const double half_width = 0.5 * (action_hi - action_lo);
  Matrix cands = rng.uniform_matrix(action_lo, action_hi, n_samples, action_dim);

  double noise_scale = 0.33;
  for (int iter = 0; iter < n_iters; ++iter) {
    const Vector probs = softmax_neg_energy(energy(cands), temperature);
    if (iter + 1 == n_iters) {
      Eigen::Index best = 0;
      probs.maxCoeff(&best);
      return cands.row(best).transpose();
    }
    // multinomial resampling with replacement
    Vector cumsum(probs.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs(i);
      cumsum(i) = acc;
    }
    Matrix next(n_samples, action_dim);
    for (int i = 0; i < n_samples; ++i) {
      const double u = rng.uniform() * acc;
      Eigen::Index pick = std::upper_bound(cumsum.data(), cumsum.data() + cumsum.size(), u) -
                          cumsum.data();
      if (pick >= cumsum.size()) pick = cumsum.size() - 1;
      next.row(i) = cands.row(pick);
    }
    for (int i = 0; i < n_samples; ++i) {
      for (int j = 0; j < action_dim; ++j) {
        next(i, j) += noise_scale * half_width * rng.gaussian();
      }
    }
    cands = next.cwiseMax(action_lo).cwiseMin(action_hi);
    noise_scale /= 3.0;
  }
  return cands.row(0).transpose();  // n_iters >= 1 always returns earlier
}

Vector act_ibc(const EnergyModel& ebm, const Vector& state, Rng& rng, int n_samples, int n_iters,
               double temperature) {
  if (state.size() != ebm.state_dim) {
    throw ShapeError("act_ibc: state dimension mismatch");
  }
  const EnergyFn energy = [&ebm, &state](const Matrix& candidates) {
    const Matrix states = state.transpose().replicate(candidates.rows(), 1);
    return ebm_energy(ebm, states, candidates);
  };
  return act_ibc_fn(energy, ebm.action_dim, ebm.action_lo, ebm.action_hi, rng, n_samples, n_iters,
                    temperature);
}

}  // namespace dbc
