#include "dbc/vae.hpp"

#include <cmath>

#include "dbc/adam.hpp"
#include "dbc/sampler.hpp"

namespace dbc {
namespace {

constexpr double kVaeLrDecay = 0.5;
constexpr long kVaeLrDecayEvery = 5000;

}  // namespace

VaeModel make_vae(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng) {
  VaeModel vae;
  vae.state_dim = state_dim;
  vae.action_dim = action_dim;
  vae.latent_dim = cfg.latent_dim;
  const int d = state_dim + action_dim;
  vae.encoder = make_mlp(cfg.layer_dims(d, 2 * cfg.latent_dim), cfg.activation, rng);
  vae.decoder = make_mlp(cfg.layer_dims(cfg.latent_dim, d), cfg.activation, rng);
  vae.stats = NormStats::identity(state_dim, action_dim);
  return vae;
}

VaeEval vae_elbo_eval(const VaeModel& vae, const Matrix& x, const Matrix& zeta) {
  require_cols(x, vae.state_dim + vae.action_dim, "vae_elbo_eval x");
  if (zeta.rows() != x.rows() || zeta.cols() != vae.latent_dim) {
    throw ShapeError("vae_elbo_eval: zeta must be rows x latent_dim");
  }
  VaeEval ev;
  ev.x = x;
  ev.zeta = zeta;
  const Matrix enc_out = mlp_forward(vae.encoder, x, ev.enc_tape);
  ev.mu = enc_out.leftCols(vae.latent_dim);
  ev.logvar = enc_out.rightCols(vae.latent_dim);
  ev.sigma = (0.5 * ev.logvar.array()).exp();
  const Matrix z = ev.mu + ev.sigma.cwiseProduct(zeta);
  ev.xhat = mlp_forward(vae.decoder, z, ev.dec_tape);

  const Vector recon = (ev.xhat - x).array().square().rowwise().sum();
  const Vector kl = 0.5 * (ev.mu.array().square() + ev.sigma.array().square() - 1.0 -
                           ev.logvar.array())
                              .rowwise()
                              .sum();
  ev.per_sample = recon + kl;
  ev.loss = ev.per_sample.mean();
  return ev;
}

Matrix vae_elbo_backward(const VaeModel& vae, const VaeEval& ev, const Vector& weights,
                         Vector* encoder_grads, Vector* decoder_grads) {
  const double b = static_cast<double>(ev.x.rows());
  Vector w = weights.size() == 0 ? Vector::Ones(ev.x.rows()) : weights;
  if (w.size() != ev.x.rows()) {
    throw ShapeError("vae_elbo_backward: weight length mismatch");
  }

  Matrix d_xhat = (2.0 / b) * (ev.xhat - ev.x);
  d_xhat.array().colwise() *= w.array();
  const Matrix d_z = mlp_backward(vae.decoder, ev.dec_tape, d_xhat, decoder_grads);

  // reparameterization: z = mu + sigma * zeta, sigma = exp(logvar / 2)
  Matrix d_mu = d_z;
  Matrix d_logvar = 0.5 * d_z.cwiseProduct(ev.zeta).cwiseProduct(ev.sigma);
  // KL term
  Matrix d_mu_kl = (1.0 / b) * ev.mu;
  d_mu_kl.array().colwise() *= w.array();
  d_mu += d_mu_kl;
  Matrix d_logvar_kl = (0.5 / b) * (ev.sigma.array().square() - 1.0).matrix();
  d_logvar_kl.array().colwise() *= w.array();
  d_logvar += d_logvar_kl;

  Matrix d_enc_out(ev.x.rows(), 2 * vae.latent_dim);
  d_enc_out.leftCols(vae.latent_dim) = d_mu;
  d_enc_out.rightCols(vae.latent_dim) = d_logvar;
  Matrix d_x = mlp_backward(vae.encoder, ev.enc_tape, d_enc_out, encoder_grads);

  // x is also the reconstruction target
  Matrix d_target = (-2.0 / b) * (ev.xhat - ev.x);
  d_target.array().colwise() *= w.array();
  d_x += d_target;
  return d_x;
}

VaeModel train_vae(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.rows() == 0) throw ConfigError("train_vae: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng noise_rng = rng.stream("noise");

  VaeModel vae = make_vae(ds.state_dim, ds.action_dim, cfg, init_rng);
  vae.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);

  const Matrix joint = concat_state_action(ds.states, ds.actions);
  AdamState enc_opt = make_adam(vae.encoder.params.size(), cfg.lr);
  AdamState dec_opt = make_adam(vae.decoder.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  Matrix x(std::min<long>(cfg.batch, ds.rows()), joint.cols());
  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<long>(i)) = joint.row(idx[i]);
    }
    const Matrix zeta = noise_rng.gaussian_matrix(x.rows(), vae.latent_dim);
    VaeEval ev = vae_elbo_eval(vae, x, zeta);
    if (!std::isfinite(ev.loss)) {
      throw StateError("train_vae: non-finite loss at iteration " + std::to_string(it));
    }
    vae_elbo_backward(vae, ev, Vector(), &vae.encoder.grads, &vae.decoder.grads);
    const double lr =
        cfg.lr * std::pow(kVaeLrDecay, static_cast<double>(it / kVaeLrDecayEvery));
    enc_opt.lr = lr;
    dec_opt.lr = lr;
    adam_step(vae.encoder, enc_opt);
    adam_step(vae.decoder, dec_opt);
  }
  return vae;
}

double vae_guidance_loss(const VaeModel& vae, const Matrix& norm_states,
                         const Matrix& norm_policy_actions, const Matrix& norm_expert_actions,
                         const Matrix& zeta, Matrix* grad_wrt_actions) {
  VaeEval agent =
      vae_elbo_eval(vae, concat_state_action(norm_states, norm_policy_actions), zeta);
  const VaeEval expert =
      vae_elbo_eval(vae, concat_state_action(norm_states, norm_expert_actions), zeta);
  const Eigen::ArrayXd gap = (agent.per_sample - expert.per_sample).array();
  if (grad_wrt_actions != nullptr) {
    const Vector active = (gap > 0.0).cast<double>();
    const Matrix d_x = vae_elbo_backward(vae, agent, active, nullptr, nullptr);
    *grad_wrt_actions = d_x.rightCols(vae.action_dim);
  }
  return gap.max(0.0).mean();
}

}  // namespace dbc
