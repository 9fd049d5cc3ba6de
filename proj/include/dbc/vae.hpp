#pragma once

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/mlp.hpp"

namespace dbc {

/// Variational autoencoder over (state, action) pairs. The encoder emits
/// latent mean and log-variance halves; the standard deviation is
/// exp(logvar/2), strictly positive by construction.
struct VaeModel {
  MlpModel encoder;  // (s, a) -> (mu, logvar)
  MlpModel decoder;  // latent -> (s, a)
  int state_dim = 0;
  int action_dim = 0;
  int latent_dim = 0;
  NormStats stats;
};

VaeModel make_vae(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng);

/// Reconstruction + KL evidence bound on one batch with fixed latent
/// noise zeta. per_sample holds |xhat - x|^2 + KL per row.
struct VaeEval {
  double loss = 0.0;
  Vector per_sample;
  Matrix x, mu, logvar, sigma, zeta, xhat;
  MlpTape enc_tape, dec_tape;
};

VaeEval vae_elbo_eval(const VaeModel& vae, const Matrix& x, const Matrix& zeta);

/// Gradient of (1/rows) sum_i w_i per_sample_i with respect to x, through
/// both the encoder input and the reconstruction target. Parameter grads
/// accumulate into the provided buffers when non-null.
Matrix vae_elbo_backward(const VaeModel& vae, const VaeEval& ev, const Vector& weights,
                         Vector* encoder_grads, Vector* decoder_grads);

VaeModel train_vae(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng);

/// Clamped agent-minus-expert reconstruction guidance with shared latent
/// noise, mirroring the diffusion-model loss shape. Gradient flows into
/// the (normalized) policy actions only; the VAE stays frozen.
double vae_guidance_loss(const VaeModel& vae, const Matrix& norm_states,
                         const Matrix& norm_policy_actions, const Matrix& norm_expert_actions,
                         const Matrix& zeta, Matrix* grad_wrt_actions);

}  // namespace dbc
