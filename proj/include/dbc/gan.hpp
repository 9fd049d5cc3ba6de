#pragma once

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/policy.hpp"

namespace dbc {

/// Generator policy co-trained against a discriminator on (state, action)
/// pairs. The discriminator net emits logits; probabilities appear only
/// at the interface.
struct GanPair {
  Policy generator;
  MlpModel discriminator;  // (s, a) -> logit
  int state_dim = 0;
  int action_dim = 0;
};

/// Numerically stable binary cross entropy on a logit:
/// target 1 -> softplus(-z), target 0 -> softplus(z).
double bce_with_logits(double logit, double target);

/// Discriminator probability for raw (state, action) rows.
Vector gan_discriminator_prob(const GanPair& gan, const Matrix& states, const Matrix& actions);

/// Alternating updates: the discriminator separates expert pairs from
/// generated ones, the generator minimizes -log D(s, a_hat), plus the
/// cloning loss scaled by lambda_gan when use_bc is on.
GanPair train_gan_bc(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng);

}  // namespace dbc
