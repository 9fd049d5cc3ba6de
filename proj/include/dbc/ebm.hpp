#pragma once

#include <functional>

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/mlp.hpp"

namespace dbc {

/// Scalar energy over (state, action) pairs; low energy marks expert-like
/// pairs. The net runs in normalized space; the action box is raw.
struct EnergyModel {
  MlpModel net;  // (s, a) -> 1
  int state_dim = 0;
  int action_dim = 0;
  NormStats stats;
  double action_lo = -1.0;
  double action_hi = 1.0;
};

/// InfoNCE training: each expert pair is the positive against n_neg
/// uniform-random actions from the action box.
EnergyModel train_ebm(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng);

/// Raw-space energies of (state, action) rows.
Vector ebm_energy(const EnergyModel& ebm, const Matrix& states, const Matrix& actions);

/// Mean energy of (s, pi(s)) over a normalized batch, with the gradient
/// with respect to the (normalized) policy actions. The model is frozen.
double ebm_guidance_loss(const EnergyModel& ebm, const Matrix& norm_states,
                         const Matrix& norm_actions, Matrix* grad_wrt_actions);

/// Derivative-free inference: sample candidates, softmax over negated
/// energies, resample and perturb with shrinking noise, then return the
/// highest-probability candidate of the final iteration.
Vector act_ibc(const EnergyModel& ebm, const Vector& state, Rng& rng, int n_samples = 1000,
               int n_iters = 3, double temperature = 1.0);

/// Same optimizer over an arbitrary energy of candidate action rows.
using EnergyFn = std::function<Vector(const Matrix& candidate_actions)>;
Vector act_ibc_fn(const EnergyFn& energy, int action_dim, double action_lo, double action_hi,
                  Rng& rng, int n_samples = 1000, int n_iters = 3, double temperature = 1.0);

/// Candidate-selection probabilities of one act_ibc iteration (softmax of
/// -energy/temperature); exposed for the scale-equivariance property.
Vector ibc_candidate_probs(const EnergyModel& ebm, const Vector& state, const Matrix& candidates,
                           double temperature);

}  // namespace dbc
