#include <doctest.h>

#include "dbc/adam.hpp"
#include "dbc/diffusion_policy.hpp"
#include "dbc/ebm.hpp"
#include "dbc/experiment.hpp"
#include "dbc/gan.hpp"
#include "dbc/vae.hpp"
#include "helpers.hpp"

using namespace dbc;

namespace {

DemoDataset random_dataset(int rows, int state_dim, int action_dim, std::uint64_t seed) {
  Rng rng(seed);
  DemoDataset ds;
  ds.state_dim = state_dim;
  ds.action_dim = action_dim;
  ds.states = rng.gaussian_matrix(rows, state_dim);
  ds.actions = rng.uniform_matrix(-0.9, 0.9, rows, action_dim);
  for (int i = 0; i < rows; ++i) {
    ds.traj_ids.push_back(i / 10);
    ds.steps.push_back(i % 10);
  }
  ds.stats = compute_norm_stats(ds);
  return ds;
}

TrainConfig small_config(const std::string& role, int layers, int hidden, double lr, long epochs) {
  TrainConfig cfg;
  cfg.role = role;
  cfg.layers = layers;
  cfg.hidden = hidden;
  cfg.activation = Activation::kRelu;
  cfg.lr = lr;
  cfg.batch = 32;
  cfg.epochs = epochs;
  cfg.n_steps = 10;
  cfg.beta_start = 1e-3;
  cfg.beta_end = 0.3;
  cfg.latent_dim = 6;
  cfg.n_neg = 8;
  return cfg;
}

}  // namespace

TEST_CASE("infonce training separates expert pairs from random actions") {
  // constant-action dataset: the expert action should score lower energy
  Rng data_rng(1);
  DemoDataset ds;
  ds.state_dim = 2;
  ds.action_dim = 2;
  ds.states = data_rng.gaussian_matrix(200, 2);
  ds.actions = Matrix::Zero(200, 2);
  ds.actions.col(0).array() += 0.5;
  for (int i = 0; i < 200; ++i) {
    ds.traj_ids.push_back(i);
    ds.steps.push_back(0);
  }
  ds.stats = compute_norm_stats(ds);

  TrainConfig cfg = small_config("ebm", 3, 24, 1e-3, 800);
  Rng rng(2);
  const EnergyModel ebm = train_ebm(ds, cfg, rng);

  Rng probe_rng(3);
  const Matrix states = probe_rng.gaussian_matrix(50, 2);
  Matrix expert_actions = Matrix::Zero(50, 2);
  expert_actions.col(0).array() += 0.5;
  const Matrix random_actions = probe_rng.uniform_matrix(-1.0, 1.0, 50, 2);
  CHECK(ebm_energy(ebm, states, expert_actions).mean() <
        ebm_energy(ebm, states, random_actions).mean());
}

TEST_CASE("infonce gradient matches finite differences") {
  const DemoDataset ds = random_dataset(32, 2, 1, 4);
  TrainConfig cfg = small_config("ebm", 2, 10, 1e-3, 1);
  cfg.batch = 32;

  // one training step's loss as a function of params, recomputed exactly
  const auto loss_for = [&](const EnergyModel& model, const Matrix& x, int n_cand) {
    const Vector e = mlp_apply(model.net, x).col(0);
    double total = 0.0;
    const long b = x.rows() / n_cand;
    for (long i = 0; i < b; ++i) {
      const auto block = e.segment(i * n_cand, n_cand);
      const double zmax = (-block).maxCoeff();
      total += std::log((-block.array() - zmax).exp().sum()) + zmax + block(0);
    }
    return total / static_cast<double>(b);
  };

  Rng rng(5);
  EnergyModel ebm;
  ebm.state_dim = 2;
  ebm.action_dim = 1;
  ebm.stats = NormStats::identity(2, 1);
  Rng init(6);
  ebm.net = make_mlp({3, 10, 1}, Activation::kRelu, init);

  // candidate block: positive then negatives per sample
  const int n_cand = 5;
  Matrix x(8 * n_cand, 3);
  Rng xr(7);
  for (long i = 0; i < x.rows(); ++i) x.row(i) = xr.gaussian_matrix(1, 3);

  MlpTape tape;
  const Matrix energy = mlp_forward(ebm.net, x, tape);
  Matrix d_energy(energy.rows(), 1);
  for (long i = 0; i < 8; ++i) {
    const auto block = energy.col(0).segment(i * n_cand, n_cand);
    const double zmax = (-block).maxCoeff();
    const Eigen::ArrayXd p = (-block.array() - zmax).exp();
    const double denom = p.sum();
    for (int k = 0; k < n_cand; ++k) {
      d_energy(i * n_cand + k, 0) = -(p(k) / denom - (k == 0 ? 1.0 : 0.0)) / 8.0;
    }
  }
  ebm.net.zero_grads();
  mlp_backward(ebm.net, tape, d_energy);

  const auto loss_at = [&](const Vector& params) {
    EnergyModel probe = ebm;
    probe.net.params = params;
    return loss_for(probe, x, n_cand);
  };
  const Vector numeric = test::finite_diff_grad(loss_at, ebm.net.params);
  CHECK(test::rel_error(ebm.net.grads, numeric) <= 1e-4);
}

TEST_CASE("ebm guidance") {
  SUBCASE("constant energy gives zero gradient") {
    EnergyModel ebm;
    ebm.state_dim = 1;
    ebm.action_dim = 1;
    ebm.stats = NormStats::identity(1, 1);
    Rng init(8);
    ebm.net = make_mlp({2, 6, 1}, Activation::kRelu, init);
    ebm.net.params.setZero();
    Rng rng(9);
    Matrix grad;
    ebm_guidance_loss(ebm, rng.gaussian_matrix(4, 1), rng.gaussian_matrix(4, 1), &grad);
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("gradient of a learned quadratic bowl points toward its center") {
    // regress energy = |a - a*|^2 with a small net, then compare the
    // guidance direction against the analytic 2(a - a*)
    const Eigen::Vector2d a_star(0.3, -0.2);
    Rng rng(10);
    EnergyModel ebm;
    ebm.state_dim = 1;
    ebm.action_dim = 2;
    ebm.stats = NormStats::identity(1, 2);
    Rng init(11);
    ebm.net = make_mlp({3, 32, 32, 1}, Activation::kTanh, init);
    AdamState opt = make_adam(ebm.net.params.size(), 3e-3);
    MlpTape tape;
    for (int it = 0; it < 3000; ++it) {
      Matrix x(64, 3);
      Matrix target(64, 1);
      for (int i = 0; i < 64; ++i) {
        x(i, 0) = 0.0;
        x(i, 1) = rng.uniform(-1, 1);
        x(i, 2) = rng.uniform(-1, 1);
        target(i, 0) = (Eigen::Vector2d(x(i, 1), x(i, 2)) - a_star).squaredNorm();
      }
      const Matrix pred = mlp_forward(ebm.net, x, tape);
      mlp_backward(ebm.net, tape, (2.0 / pred.size()) * (pred - target));
      adam_step(ebm.net, opt);
    }
    // check the guidance direction at a few probe actions
    int agree = 0;
    for (int i = 0; i < 20; ++i) {
      const Matrix s = Matrix::Zero(1, 1);
      Matrix a(1, 2);
      a(0, 0) = rng.uniform(-0.8, 0.8);
      a(0, 1) = rng.uniform(-0.8, 0.8);
      Matrix grad;
      ebm_guidance_loss(ebm, s, a, &grad);
      const Eigen::Vector2d analytic = 2.0 * (Eigen::Vector2d(a(0, 0), a(0, 1)) - a_star);
      if (grad.row(0).dot(analytic.transpose()) > 0.0) ++agree;
    }
    CHECK(agree >= 18);
  }
}

TEST_CASE("derivative-free optimizer finds quadratic minima") {
  Rng rng(12);
  int hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector2d a_star(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const EnergyFn energy = [&a_star](const Matrix& cands) {
      Vector e(cands.rows());
      for (long i = 0; i < cands.rows(); ++i) {
        e(i) = (cands.row(i).transpose() - a_star).squaredNorm();
      }
      return e;
    };
    const Vector a = act_ibc_fn(energy, 2, -1.0, 1.0, rng, 1000, 3);
    if ((a - a_star).norm() <= 0.05) ++hits;
  }
  CHECK(hits == 20);
}

TEST_CASE("act_ibc determinism and scale equivariance") {
  const DemoDataset ds = random_dataset(64, 2, 2, 13);
  TrainConfig cfg = small_config("ebm", 2, 12, 1e-3, 100);
  Rng rng(14);
  const EnergyModel ebm = train_ebm(ds, cfg, rng);

  Rng r1(15), r2(15);
  const Vector s = Vector::Zero(2);
  CHECK(act_ibc(ebm, s, r1) == act_ibc(ebm, s, r2));

  SUBCASE("constant energy still returns a deterministic candidate") {
    EnergyModel flat = ebm;
    flat.net.params.setZero();
    Rng r3(16), r4(16);
    const Vector a1 = act_ibc(flat, s, r3);
    const Vector a2 = act_ibc(flat, s, r4);
    CHECK(a1 == a2);
    CHECK(a1.cwiseAbs().maxCoeff() <= 1.0);
  }

  SUBCASE("scaling energies and temperature together preserves selection") {
    Rng cr(17);
    const Matrix cands = cr.uniform_matrix(-1.0, 1.0, 64, 2);
    const Vector p1 = ibc_candidate_probs(ebm, s, cands, 1.0);
    EnergyModel scaled = ebm;
    // scale the final linear layer by c (energies scale by c, biases too)
    const double c = 7.5;
    const long last = scaled.net.params.size();
    const long tail = 12 * 1 + 1;  // final layer weights + bias
    scaled.net.params.segment(last - tail, tail) *= c;
    const Vector p2 = ibc_candidate_probs(scaled, s, cands, c);
    CHECK((p1 - p2).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::Index i1, i2;
    p1.maxCoeff(&i1);
    p2.maxCoeff(&i2);
    CHECK(i1 == i2);
  }
}

TEST_CASE("vae elbo") {
  TrainConfig cfg = small_config("vae", 2, 10, 1e-3, 1);
  Rng init(18);
  VaeModel vae = make_vae(2, 1, cfg, init);

  SUBCASE("matched gaussians have zero kl") {
    // zero encoder outputs mu = 0 and logvar = 0 (sigma = 1)
    vae.encoder.params.setZero();
    vae.decoder.params.setZero();
    Rng rng(19);
    const Matrix x = Matrix::Zero(6, 3);
    const Matrix zeta = Matrix::Zero(6, cfg.latent_dim);
    const VaeEval ev = vae_elbo_eval(vae, x, zeta);
    CHECK(ev.loss == 0.0);  // zero recon target, zero kl
  }

  SUBCASE("matches a scripted oracle") {
    Rng rng(20);
    const Matrix x = rng.gaussian_matrix(4, 3);
    const Matrix zeta = rng.gaussian_matrix(4, cfg.latent_dim);
    const VaeEval ev = vae_elbo_eval(vae, x, zeta);
    const Matrix enc = mlp_apply(vae.encoder, x);
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      Vector z(cfg.latent_dim);
      double kl = 0.0;
      for (int l = 0; l < cfg.latent_dim; ++l) {
        const double mu = enc(i, l);
        const double logvar = enc(i, cfg.latent_dim + l);
        const double sigma = std::exp(0.5 * logvar);
        z(l) = mu + sigma * zeta(i, l);
        kl += 0.5 * (mu * mu + sigma * sigma - 1.0 - logvar);
      }
      const Matrix xhat = mlp_apply(vae.decoder, z.transpose());
      total += (xhat.row(0) - x.row(i)).squaredNorm() + kl;
    }
    CHECK(ev.loss == doctest::Approx(total / 4.0).epsilon(1e-10));
  }

  SUBCASE("parameter gradients match finite differences") {
    Rng rng(21);
    const Matrix x = rng.gaussian_matrix(3, 3);
    const Matrix zeta = rng.gaussian_matrix(3, cfg.latent_dim);
    VaeEval ev = vae_elbo_eval(vae, x, zeta);
    vae.encoder.zero_grads();
    vae.decoder.zero_grads();
    vae_elbo_backward(vae, ev, Vector(), &vae.encoder.grads, &vae.decoder.grads);

    const auto enc_loss = [&](const Vector& p) {
      VaeModel probe = vae;
      probe.encoder.params = p;
      return vae_elbo_eval(probe, x, zeta).loss;
    };
    CHECK(test::rel_error(vae.encoder.grads, test::finite_diff_grad(enc_loss, vae.encoder.params)) <=
          1e-4);
    const auto dec_loss = [&](const Vector& p) {
      VaeModel probe = vae;
      probe.decoder.params = p;
      return vae_elbo_eval(probe, x, zeta).loss;
    };
    CHECK(test::rel_error(vae.decoder.grads, test::finite_diff_grad(dec_loss, vae.decoder.params)) <=
          1e-4);
  }

  SUBCASE("guidance vanishes on expert replay with shared latent noise") {
    Rng rng(22);
    const Matrix s = rng.gaussian_matrix(5, 2);
    const Matrix a = rng.gaussian_matrix(5, 1);
    const Matrix zeta = rng.gaussian_matrix(5, cfg.latent_dim);
    Matrix grad;
    CHECK(vae_guidance_loss(vae, s, a, a, zeta, &grad) == 0.0);
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gan losses") {
  SUBCASE("logits bce matches the probability-space oracle") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      const double z = rng.uniform(-8.0, 8.0);
      const double p = 1.0 / (1.0 + std::exp(-z));
      CHECK(std::abs(bce_with_logits(z, 1.0) - (-std::log(p))) <= 1e-9);
      CHECK(std::abs(bce_with_logits(z, 0.0) - (-std::log(1.0 - p))) <= 1e-9);
    }
  }

  SUBCASE("a perfect discriminator has zero loss") {
    CHECK(bce_with_logits(1000.0, 1.0) == 0.0);
    CHECK(bce_with_logits(-1000.0, 0.0) == 0.0);
  }

  SUBCASE("discriminator and generator gradients match finite differences") {
    Rng rng(24);
    Rng init_d(25), init_g(26);
    MlpModel disc = make_mlp({3, 8, 1}, Activation::kRelu, init_d);
    MlpModel gen = make_mlp({2, 8, 1}, Activation::kTanh, init_g);
    const Matrix s = rng.gaussian_matrix(6, 2);
    const Matrix a = rng.gaussian_matrix(6, 1);

    const auto disc_loss_at = [&](const Vector& p) {
      MlpModel probe = disc;
      probe.params = p;
      const Matrix a_hat = mlp_apply(gen, s);
      double total = 0.0;
      for (int i = 0; i < 6; ++i) {
        Matrix xr(1, 3), xf(1, 3);
        xr << s(i, 0), s(i, 1), a(i, 0);
        xf << s(i, 0), s(i, 1), a_hat(i, 0);
        total += bce_with_logits(mlp_apply(probe, xr)(0, 0), 1.0) +
                 bce_with_logits(mlp_apply(probe, xf)(0, 0), 0.0);
      }
      return total / 6.0;
    };

    // analytic: two backward passes over real and fake batches
    const Matrix a_hat = mlp_apply(gen, s);
    MlpTape tr, tf;
    const Matrix zr = mlp_forward(disc, concat_state_action(s, a), tr);
    const Matrix zf = mlp_forward(disc, concat_state_action(s, a_hat), tf);
    Matrix dr(6, 1), df(6, 1);
    for (int i = 0; i < 6; ++i) {
      dr(i, 0) = (1.0 / (1.0 + std::exp(-zr(i, 0))) - 1.0) / 6.0;
      df(i, 0) = (1.0 / (1.0 + std::exp(-zf(i, 0)))) / 6.0;
    }
    disc.zero_grads();
    mlp_backward(disc, tr, dr);
    mlp_backward(disc, tf, df);
    CHECK(test::rel_error(disc.grads, test::finite_diff_grad(disc_loss_at, disc.params)) <= 1e-4);

    const auto gen_loss_at = [&](const Vector& p) {
      MlpModel probe = gen;
      probe.params = p;
      const Matrix ah = mlp_apply(probe, s);
      double total = 0.0;
      for (int i = 0; i < 6; ++i) {
        Matrix x(1, 3);
        x << s(i, 0), s(i, 1), ah(i, 0);
        total += bce_with_logits(mlp_apply(disc, x)(0, 0), 1.0);
      }
      return total / 6.0;
    };
    MlpTape tg, tgen;
    const Matrix ah = mlp_forward(gen, s, tgen);
    const Matrix zg = mlp_forward(disc, concat_state_action(s, ah), tg);
    Matrix dg(6, 1);
    for (int i = 0; i < 6; ++i) {
      dg(i, 0) = (1.0 / (1.0 + std::exp(-zg(i, 0))) - 1.0) / 6.0;
    }
    const Matrix d_pair = mlp_backward(disc, tg, dg, nullptr);
    gen.zero_grads();
    mlp_backward(gen, tgen, d_pair.rightCols(1));
    CHECK(test::rel_error(gen.grads, test::finite_diff_grad(gen_loss_at, gen.params)) <= 1e-4);
  }

  SUBCASE("co-training runs and stays finite") {
    const DemoDataset ds = random_dataset(64, 2, 1, 27);
    TrainConfig cfg = small_config("gan", 2, 8, 1e-3, 60);
    Rng rng(28);
    const GanPair gan = train_gan_bc(ds, cfg, rng);
    Rng pr(29);
    const Vector probs = gan_discriminator_prob(gan, pr.gaussian_matrix(10, 2),
                                                pr.gaussian_matrix(10, 1));
    for (int i = 0; i < 10; ++i) {
      CHECK(probs(i) > 0.0);
      CHECK(probs(i) < 1.0);
    }
  }
}

TEST_CASE("diffusion policy") {
  // constant expert action: the denoiser should reproduce it
  DemoDataset ds;
  ds.state_dim = 2;
  ds.action_dim = 2;
  Rng data_rng(30);
  ds.states = data_rng.gaussian_matrix(256, 2);
  ds.actions = Matrix::Zero(256, 2);
  ds.actions.col(0).array() = 0.4;
  ds.actions.col(1).array() = -0.3;
  for (int i = 0; i < 256; ++i) {
    ds.traj_ids.push_back(i);
    ds.steps.push_back(0);
  }
  ds.stats = compute_norm_stats(ds);

  TrainConfig cfg = small_config("dp", 3, 32, 1e-3, 1200);
  cfg.n_steps = 20;
  Rng rng(31);
  const CondDiffusionPolicy dp = train_diffusion_policy(ds, cfg, rng);

  Rng act_rng(32);
  int close = 0;
  for (int i = 0; i < 20; ++i) {
    const Vector a = act_diffusion_policy(dp, ds.states.row(i).transpose(), act_rng);
    if ((a - Vector(Eigen::Vector2d(0.4, -0.3))).norm() <= 0.1) ++close;
  }
  CHECK(close >= 18);

  SUBCASE("noiseless reverse chain is deterministic") {
    Rng r1(33), r2(33);
    const Vector s = ds.states.row(0).transpose();
    CHECK(act_diffusion_policy(dp, s, r1, 0.0) == act_diffusion_policy(dp, s, r2, 0.0));
  }
}

TEST_CASE("guided policy trainers improve their guidance objective") {
  const DemoDataset ds = random_dataset(96, 2, 2, 34);
  TrainConfig model_cfg = small_config("ebm", 2, 16, 1e-3, 300);
  Rng r1(35);
  const EnergyModel ebm = train_ebm(ds, model_cfg, r1);
  TrainConfig pol_cfg = small_config("ebm_policy", 2, 16, 1e-3, 200);
  Rng r2(36);
  const Policy p = train_policy_with_ebm(ds, ebm, pol_cfg, r2);
  CHECK(p.net.params.allFinite());

  TrainConfig vae_cfg = small_config("vae", 2, 16, 1e-3, 300);
  Rng r3(37);
  const VaeModel vae = train_vae(ds, vae_cfg, r3);
  Rng r4(38);
  const Policy pv = train_policy_with_vae(ds, vae, pol_cfg, r4);
  CHECK(pv.net.params.allFinite());
}
