#include <doctest.h>

#include "dbc/diffusion.hpp"
#include "helpers.hpp"

using namespace dbc;

namespace {

TrainConfig tiny_dm_config() {
  TrainConfig cfg;
  cfg.role = "dm";
  cfg.layers = 3;
  cfg.hidden = 32;
  cfg.activation = Activation::kRelu;
  cfg.lr = 1e-3;
  cfg.batch = 64;
  cfg.epochs = 1500;
  cfg.n_steps = 20;
  cfg.beta_start = 1e-3;
  cfg.beta_end = 0.3;
  return cfg;
}

DemoDataset point_mass_dataset(long rows, double value, int state_dim = 1, int action_dim = 1) {
  DemoDataset ds;
  ds.state_dim = state_dim;
  ds.action_dim = action_dim;
  ds.states = Matrix::Constant(rows, state_dim, value);
  ds.actions = Matrix::Constant(rows, action_dim, value);
  for (long i = 0; i < rows; ++i) {
    ds.traj_ids.push_back(static_cast<int>(i));
    ds.steps.push_back(0);
  }
  ds.stats = NormStats::identity(state_dim, action_dim);
  return ds;
}

}  // namespace

TEST_CASE("zero model gives the mean-square of the noise") {
  TrainConfig cfg = tiny_dm_config();
  Rng rng(1);
  NoiseModel phi = make_noise_model(1, 1, cfg, rng);
  phi.net.params.setZero();
  const Matrix x0 = rng.gaussian_matrix(12, 2);
  const Matrix eps = rng.gaussian_matrix(12, 2);
  const DiffLossEval ev = diff_loss_eval(phi, x0, 5, eps);
  CHECK(ev.loss == doctest::Approx(eps.array().square().mean()).epsilon(1e-12));

  SUBCASE("perfect prediction gives exactly zero") {
    // the zero model predicts zero noise; feed zero noise
    const DiffLossEval perfect = diff_loss_eval(phi, x0, 5, Matrix::Zero(12, 2));
    CHECK(perfect.loss == 0.0);
  }
}

TEST_CASE("diff loss matches a straight-line re-computation") {
  TrainConfig cfg = tiny_dm_config();
  cfg.layers = 1;  // single linear layer keeps the oracle a plain loop
  Rng rng(2);
  NoiseModel phi = make_noise_model(2, 1, cfg, rng);
  const Matrix x0 = rng.gaussian_matrix(5, 3);
  const Matrix eps = rng.gaussian_matrix(5, 3);
  const int n = 7;
  const DiffLossEval ev = diff_loss_eval(phi, x0, n, eps);

  // scripted oracle: noising, embedding, one linear layer, mse
  const double abar = phi.sched.alpha_bar(n - 1);
  double total = 0.0;
  for (int r = 0; r < 5; ++r) {
    double in[7];
    for (int j = 0; j < 3; ++j) in[j] = std::sqrt(abar) * x0(r, j) + std::sqrt(1 - abar) * eps(r, j);
    const auto emb = time_embedding(n, phi.sched.steps);
    for (int j = 0; j < 4; ++j) in[3 + j] = emb(j);
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int i = 0; i < 7; ++i) acc += in[i] * phi.net.params(i * 3 + j);
      acc += phi.net.params(7 * 3 + j);
      const double r2 = acc - eps(r, j);
      total += r2 * r2;
    }
  }
  CHECK(ev.loss == doctest::Approx(total / 15.0).epsilon(1e-12));
}

TEST_CASE("action-slice gradient matches finite differences") {
  TrainConfig cfg = tiny_dm_config();
  cfg.layers = 3;
  cfg.hidden = 16;
  Rng rng(3);
  NoiseModel phi = make_noise_model(2, 2, cfg, rng);
  const Matrix x0 = rng.gaussian_matrix(4, 4);
  const Matrix eps = rng.gaussian_matrix(4, 4);
  const int n = 9;

  const DiffLossEval ev = diff_loss_eval(phi, x0, n, eps);
  const Matrix d_x0 = diff_loss_backward(phi, ev, Vector(), nullptr);

  const auto loss_at = [&](const Vector& flat) {
    Matrix xi = x0;
    for (Eigen::Index i = 0; i < flat.size(); ++i) xi(i / 4, i % 4) = flat(i);
    return diff_loss_eval(phi, xi, n, eps).loss;
  };
  Vector flat(x0.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = x0(i / 4, i % 4);
  const Vector numeric = test::finite_diff_grad(loss_at, flat);
  Vector analytic(d_x0.size());
  for (Eigen::Index i = 0; i < analytic.size(); ++i) analytic(i) = d_x0(i / 4, i % 4);
  CHECK(test::rel_error(analytic, numeric) <= 1e-4);

  SUBCASE("parameter gradient too") {
    NoiseModel probe = phi;
    const double base = diff_loss(probe, x0, n, eps);
    CHECK(base == doctest::Approx(ev.loss));
    const auto loss_at_params = [&](const Vector& p) {
      NoiseModel q = phi;
      q.net.params = p;
      return diff_loss_eval(q, x0, n, eps).loss;
    };
    const Vector numeric_p = test::finite_diff_grad(loss_at_params, phi.net.params);
    CHECK(test::rel_error(probe.net.grads, numeric_p) <= 1e-4);
  }
}

TEST_CASE("training on a point mass pulls samples toward it") {
  DemoDataset ds = point_mass_dataset(256, 0.0);
  TrainConfig cfg = tiny_dm_config();
  cfg.normalize_data = false;  // keep the degenerate data in raw space
  Rng rng(4);
  NoiseModel phi = train_diffusion(ds, cfg, rng);
  Rng sample_rng(5);
  const Matrix out = sample(phi, 400, sample_rng);
  CHECK(std::abs(out.col(0).mean()) < 0.1);
  CHECK(std::abs(out.col(1).mean()) < 0.1);
  CHECK(out.allFinite());

  SUBCASE("reconstruction error beats an untrained model") {
    Rng rng2(6);
    NoiseModel fresh = make_noise_model(1, 1, cfg, rng2);
    Rng ra(7), rb(7);
    CHECK(reconstruction_mse(phi, ds, ra) <= reconstruction_mse(fresh, ds, rb));
  }
}

TEST_CASE("deterministic denoising is reproducible") {
  TrainConfig cfg = tiny_dm_config();
  Rng rng(8);
  NoiseModel phi = make_noise_model(1, 1, cfg, rng);
  const Matrix xn = rng.gaussian_matrix(6, 2);
  CHECK(denoise_deterministic(phi, xn, 10) == denoise_deterministic(phi, xn, 10));
}

TEST_CASE("empty dataset is a config error") {
  DemoDataset empty;
  empty.state_dim = 1;
  empty.action_dim = 1;
  TrainConfig cfg = tiny_dm_config();
  Rng rng(9);
  CHECK_THROWS_AS(train_diffusion(empty, cfg, rng), ConfigError);
}

TEST_CASE("noise injection is recorded and training still works") {
  DemoDataset ds = point_mass_dataset(128, 1.0);
  TrainConfig cfg = tiny_dm_config();
  cfg.epochs = 50;
  cfg.noise_level = 0.01;
  Rng rng(10);
  const NoiseModel phi = train_diffusion(ds, cfg, rng);
  CHECK(phi.noise_level == 0.01);
}

TEST_CASE("gradient field") {
  TrainConfig cfg = tiny_dm_config();
  Rng rng(11);

  SUBCASE("zero model gives a zero field with full cardinality") {
    NoiseModel phi = make_noise_model(1, 1, cfg, rng);
    phi.net.params.setZero();
    GradientFieldSpec spec;
    spec.nx = 20;
    spec.ny = 20;
    spec.x_min = -1;
    spec.x_max = 1;
    spec.y_min = -1;
    spec.y_max = 1;
    const auto rows = gradient_field(phi, spec, 10, Vector::Zero(2));
    CHECK(rows.size() == 400);
    for (const auto& r : rows) {
      CHECK(r.dx == 0.0);
      CHECK(r.dy == 0.0);
    }
  }

  SUBCASE("field learned from an origin point mass points inward") {
    DemoDataset ds = point_mass_dataset(256, 0.0);
    TrainConfig tc = tiny_dm_config();
    tc.normalize_data = false;
    Rng train_rng(12);
    const NoiseModel phi = train_diffusion(ds, tc, train_rng);
    GradientFieldSpec spec;
    spec.nx = 10;
    spec.ny = 10;
    spec.x_min = -1.5;
    spec.x_max = 1.5;
    spec.y_min = -1.5;
    spec.y_max = 1.5;
    const auto rows = gradient_field(phi, spec, tc.n_steps / 2, Vector::Zero(2));
    int pointing_in = 0;
    int counted = 0;
    for (const auto& r : rows) {
      if (std::abs(r.x) < 1e-9 && std::abs(r.y) < 1e-9) continue;
      ++counted;
      if (r.dx * -r.x + r.dy * -r.y > 0.0) ++pointing_in;
    }
    CHECK(pointing_in >= counted * 9 / 10);
  }

  SUBCASE("grid validation") {
    NoiseModel phi = make_noise_model(1, 1, cfg, rng);
    GradientFieldSpec bad;
    bad.dim_x = 0;
    bad.dim_y = 0;
    CHECK_THROWS_AS(gradient_field(phi, bad, 5, Vector::Zero(2)), ConfigError);
  }

  SUBCASE("csv header and row format") {
    const std::string csv = gradient_field_csv({{1.0, 2.0, -0.25, 0.125}});
    CHECK(csv == "x,y,dx,dy\n1,2,-0.25,0.125\n");
  }
}
