#include "dbc/gan.hpp"

#include <cmath>

#include "dbc/adam.hpp"
#include "dbc/dbc_losses.hpp"
#include "dbc/sampler.hpp"

namespace dbc {
namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double bce_with_logits(double logit, double target) {
  if (target != 0.0 && target != 1.0) throw ConfigError("bce_with_logits: target must be 0 or 1");
  return target == 1.0 ? softplus(-logit) : softplus(logit);
}

Vector gan_discriminator_prob(const GanPair& gan, const Matrix& states, const Matrix& actions) {
  const Matrix x = concat_state_action(
      apply_norm_rows(states, gan.generator.stats.state_mean, gan.generator.stats.state_std),
      apply_norm_rows(actions, gan.generator.stats.action_mean, gan.generator.stats.action_std));
  return mlp_apply(gan.discriminator, x).col(0).unaryExpr([](double z) { return logistic(z); });
}

GanPair train_gan_bc(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.rows() == 0) throw ConfigError("train_gan_bc: empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng gen_init = rng.stream("gen-init");
  Rng disc_init = rng.stream("disc-init");
  Rng batch_rng = rng.stream("batch");

  GanPair gan;
  gan.state_dim = ds.state_dim;
  gan.action_dim = ds.action_dim;
  gan.generator.state_dim = ds.state_dim;
  gan.generator.action_dim = ds.action_dim;
  gan.generator.net =
      make_mlp(cfg.layer_dims(ds.state_dim, ds.action_dim), cfg.activation, gen_init);
  gan.generator.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);
  gan.discriminator =
      make_mlp(cfg.layer_dims(ds.state_dim + ds.action_dim, 1), cfg.activation, disc_init);

  AdamState gen_opt = make_adam(gan.generator.net.params.size(), cfg.lr);
  AdamState disc_opt = make_adam(gan.discriminator.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  Matrix s, a;
  MlpTape gen_tape, disc_tape_real, disc_tape_fake, disc_tape_gen;
  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    const long b = static_cast<long>(idx.size());
    s.resize(b, ds.state_dim);
    a.resize(b, ds.action_dim);
    for (long i = 0; i < b; ++i) {
      s.row(i) = ds.states.row(idx[static_cast<std::size_t>(i)]);
      a.row(i) = ds.actions.row(idx[static_cast<std::size_t>(i)]);
    }
    const Matrix a_hat = mlp_forward(gan.generator.net, s, gen_tape);

    // discriminator step: real pairs toward 1, generated pairs toward 0
    const Matrix z_real = mlp_forward(gan.discriminator, concat_state_action(s, a), disc_tape_real);
    const Matrix z_fake =
        mlp_forward(gan.discriminator, concat_state_action(s, a_hat), disc_tape_fake);
    double disc_loss = 0.0;
    Matrix d_real(b, 1), d_fake(b, 1);
    for (long i = 0; i < b; ++i) {
      disc_loss += bce_with_logits(z_real(i, 0), 1.0) + bce_with_logits(z_fake(i, 0), 0.0);
      d_real(i, 0) = (logistic(z_real(i, 0)) - 1.0) / static_cast<double>(b);
      d_fake(i, 0) = logistic(z_fake(i, 0)) / static_cast<double>(b);
    }
    disc_loss /= static_cast<double>(b);
    if (!std::isfinite(disc_loss)) {
      throw StateError("train_gan_bc: non-finite discriminator loss at iteration " +
                       std::to_string(it));
    }
    mlp_backward(gan.discriminator, disc_tape_real, d_real);
    mlp_backward(gan.discriminator, disc_tape_fake, d_fake);
    adam_step(gan.discriminator, disc_opt);

    // generator step against the updated discriminator
    const Matrix z_gen =
        mlp_forward(gan.discriminator, concat_state_action(s, a_hat), disc_tape_gen);
    double gan_loss = 0.0;
    Matrix d_gen(b, 1);
    for (long i = 0; i < b; ++i) {
      gan_loss += bce_with_logits(z_gen(i, 0), 1.0);
      d_gen(i, 0) = (logistic(z_gen(i, 0)) - 1.0) / static_cast<double>(b);
    }
    gan_loss /= static_cast<double>(b);

    const Matrix d_pair = mlp_backward(gan.discriminator, disc_tape_gen, d_gen, nullptr);
    Matrix d_action;
    double gen_loss = gan_loss;
    if (cfg.use_bc) {
      Matrix bc_grad;
      const double bc = bc_loss(a_hat, a, &bc_grad);
      gen_loss = bc + cfg.lambda_gan * gan_loss;
      d_action = bc_grad + cfg.lambda_gan * d_pair.rightCols(ds.action_dim);
    } else {
      d_action = d_pair.rightCols(ds.action_dim);
    }
    if (!std::isfinite(gen_loss)) {
      throw StateError("train_gan_bc: non-finite generator loss at iteration " +
                       std::to_string(it));
    }
    mlp_backward(gan.generator.net, gen_tape, d_action);
    adam_step(gan.generator.net, gen_opt);
  }
  return gan;
}

}  // namespace dbc
