#include "dbc/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "dbc/adam.hpp"
#include "dbc/dbc_losses.hpp"
#include "dbc/gan.hpp"
#include "dbc/sampler.hpp"

namespace dbc {

namespace {

Policy train_guided(const DemoDataset& dataset, const TrainConfig& cfg, Rng& rng,
                    const std::function<double(const Matrix&, const Matrix&, const Matrix&, Rng&,
                                               Matrix*)>& guidance,
                    double guidance_weight) {
  if (dataset.rows() == 0) throw ConfigError(cfg.role + ": empty dataset");
  const DemoDataset ds = cfg.normalize_data ? normalize_dataset(dataset) : dataset;

  Rng init_rng = rng.stream("init");
  Rng batch_rng = rng.stream("batch");
  Rng noise_rng = rng.stream("noise");

  Policy policy;
  policy.state_dim = ds.state_dim;
  policy.action_dim = ds.action_dim;
  policy.net = make_mlp(cfg.layer_dims(ds.state_dim, ds.action_dim), cfg.activation, init_rng);
  policy.stats = ds.normalized ? ds.stats : NormStats::identity(ds.state_dim, ds.action_dim);

  AdamState opt = make_adam(policy.net.params.size(), cfg.lr);
  BatchSampler batches(ds.rows(), cfg.batch, batch_rng);

  MlpTape tape;
  Matrix s, a, bc_grad, g_grad;
  for (long it = 0; it < cfg.epochs; ++it) {
    const auto& idx = batches.next();
    const long b = static_cast<long>(idx.size());
    s.resize(b, ds.state_dim);
    a.resize(b, ds.action_dim);
    for (long i = 0; i < b; ++i) {
      s.row(i) = ds.states.row(idx[static_cast<std::size_t>(i)]);
      a.row(i) = ds.actions.row(idx[static_cast<std::size_t>(i)]);
    }
    const Matrix pred = mlp_forward(policy.net, s, tape);
    const double bc = bc_loss(pred, a, &bc_grad);
    const double guide = guidance(s, pred, a, noise_rng, &g_grad);
    const double loss = bc + guidance_weight * guide;
    if (!std::isfinite(loss)) {
      throw StateError(cfg.role + ": non-finite loss at iteration " + std::to_string(it));
    }
    Matrix d_action = bc_grad + guidance_weight * g_grad;
    mlp_backward(policy.net, tape, d_action);
    if (cfg.lr_decay) opt.lr = linearly_decayed_lr(cfg.lr, it, cfg.epochs);
    adam_step(policy.net, opt);
  }
  return policy;
}

}  // namespace

Policy train_policy_with_ebm(const DemoDataset& dataset, const EnergyModel& ebm,
                             const TrainConfig& cfg, Rng& rng) {
  return train_guided(
      dataset, cfg, rng,
      [&ebm](const Matrix& s, const Matrix& pred, const Matrix& /*a*/, Rng& /*noise*/,
             Matrix* grad) { return ebm_guidance_loss(ebm, s, pred, grad); },
      cfg.lambda_ebm);
}

Policy train_policy_with_vae(const DemoDataset& dataset, const VaeModel& vae,
                             const TrainConfig& cfg, Rng& rng) {
  return train_guided(
      dataset, cfg, rng,
      [&vae](const Matrix& s, const Matrix& pred, const Matrix& a, Rng& noise, Matrix* grad) {
        const Matrix zeta = noise.gaussian_matrix(s.rows(), vae.latent_dim);
        return vae_guidance_loss(vae, s, pred, a, zeta, grad);
      },
      cfg.lambda_vae);
}

namespace experiment {

namespace {

namespace fs = std::filesystem;

std::string artifact(const std::string& out_dir, const std::string& name) {
  return (fs::path(out_dir) / name).string();
}

std::string require_artifact(const std::string& out_dir, const std::string& name) {
  const std::string path = artifact(out_dir, name);
  if (!file_exists(path)) {
    throw DependencyError("missing upstream artifact: " + path);
  }
  return path;
}

struct EnvKind {
  bool is_maze = true;
  envs::PointMassWorld maze;
  envs::SpiralWorld spiral;
};

EnvKind env_from_config(const Config& cfg) {
  EnvKind e;
  const std::string name = cfg.get_string("env", "maze");
  if (name == "maze") {
    e.is_maze = true;
  } else if (name == "spiral") {
    e.is_maze = false;
    e.spiral = envs::make_spiral_world();
  } else {
    throw ConfigError("unknown env: " + name);
  }
  return e;
}

DemoDataset load_demos(const Config& cfg, const std::string& out_dir) {
  DemoDataset ds = load_dataset(require_artifact(out_dir, "demos.csv"));
  const double fraction = cfg.get_double("fraction", 1.0);
  if (fraction < 1.0) {
    Rng frac_rng = Rng(cfg.get_u64("seed", 0)).stream("fraction");
    ds = subsample_fraction(ds, fraction, frac_rng);
  }
  return ds;
}

envs::Actor policy_actor(Policy policy) {
  return [policy = std::move(policy)](const Vector& obs, int /*step*/, Rng& /*rng*/) {
    return act(policy, obs);
  };
}

envs::EvalReport run_eval(const Config& cfg, const EnvKind& env, const envs::Actor& actor,
                          envs::GoalBand band, int state_dim) {
  const int expected = env.is_maze ? envs::PointMassWorld::kStateDim : envs::SpiralWorld::kStateDim;
  if (state_dim != 0 && state_dim != expected) {
    throw ConfigError("eval: model expects " + std::to_string(state_dim) +
                      "-dim states but the env provides " + std::to_string(expected));
  }
  const int episodes = static_cast<int>(cfg.get_long("eval_episodes", 100));
  const std::uint64_t eval_seed = Rng(cfg.get_u64("seed", 0)).stream("eval").seed();
  return env.is_maze ? envs::evaluate(actor, env.maze, episodes, eval_seed, band)
                     : envs::evaluate(actor, env.spiral, episodes, eval_seed, band);
}

void print_summary(const envs::EvalReport& report) {
  std::cout << report_summary(report) << "\n";
}

}  // namespace

void gen_demos(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const EnvKind env = env_from_config(cfg);
  const int episodes = static_cast<int>(cfg.get_long("episodes", env.is_maze ? 100 : 20));
  Rng demo_rng = Rng(cfg.get_u64("seed", 0)).stream("demos");
  DemoDataset ds;
  if (env.is_maze) {
    ds = envs::collect_demos(env.maze, envs::maze_expert_actor(), episodes, demo_rng);
  } else {
    ds = envs::collect_demos(env.spiral, envs::spiral_expert_actor(), episodes, demo_rng);
  }
  save_dataset(artifact(out_dir, "demos.csv"), ds);
  std::cout << "demos," << ds.trajectory_count() << " trajectories," << ds.rows() << " pairs\n";
}

void train_dm(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const DemoDataset demos = load_demos(cfg, out_dir);
  const TrainConfig tc = train_config_for_role(cfg, "dm");
  Rng rng = Rng(cfg.get_u64("seed", 0)).stream("dm-train");
  const NoiseModel phi = train_diffusion(demos, tc, rng);
  save_noise_model(artifact(out_dir, "dm.ckpt"), phi, cfg.digest());
  std::cout << "dm,trained," << phi.net.params.size() << " params\n";
}

void train_policy_stage(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const DemoDataset demos = load_demos(cfg, out_dir);
  const NoiseModel phi = load_noise_model(require_artifact(out_dir, "dm.ckpt"));
  const TrainConfig tc = train_config_for_role(cfg, "policy");
  Rng rng = Rng(cfg.get_u64("seed", 0)).stream("policy-train");
  const Policy policy = train_policy(demos, phi, tc, rng);
  save_policy(artifact(out_dir, "policy.ckpt"), policy, "policy", cfg.digest());
  std::cout << "policy,trained," << policy.net.params.size() << " params\n";
}

void train_baseline(const Config& cfg, const std::string& out_dir, const std::string& method) {
  fs::create_directories(out_dir);
  const DemoDataset demos = load_demos(cfg, out_dir);
  Rng rng = Rng(cfg.get_u64("seed", 0)).stream(method + "-train");
  const std::string digest = cfg.digest();

  if (method == "bc") {
    const Policy p = train_bc(demos, train_config_for_role(cfg, "bc"), rng);
    save_policy(artifact(out_dir, "bc.ckpt"), p, "bc", digest);
  } else if (method == "ibc") {
    const EnergyModel e = train_ebm(demos, train_config_for_role(cfg, "ibc"), rng);
    save_energy_model(artifact(out_dir, "ibc.ckpt"), e, digest);
  } else if (method == "dp") {
    const CondDiffusionPolicy dp = train_diffusion_policy(demos, train_config_for_role(cfg, "dp"), rng);
    save_diffusion_policy(artifact(out_dir, "dp.ckpt"), dp, digest);
  } else if (method == "ebm") {
    Rng model_rng = rng.stream("model");
    Rng policy_rng = rng.stream("policy");
    const EnergyModel e = train_ebm(demos, train_config_for_role(cfg, "ebm"), model_rng);
    save_energy_model(artifact(out_dir, "ebm_energy.ckpt"), e, digest);
    const Policy p =
        train_policy_with_ebm(demos, e, train_config_for_role(cfg, "ebm_policy"), policy_rng);
    save_policy(artifact(out_dir, "ebm.ckpt"), p, "ebm_policy", digest);
  } else if (method == "vae") {
    Rng model_rng = rng.stream("model");
    Rng policy_rng = rng.stream("policy");
    const VaeModel v = train_vae(demos, train_config_for_role(cfg, "vae"), model_rng);
    save_vae(artifact(out_dir, "vae_enc.ckpt"), artifact(out_dir, "vae_dec.ckpt"), v, digest);
    const Policy p =
        train_policy_with_vae(demos, v, train_config_for_role(cfg, "vae_policy"), policy_rng);
    save_policy(artifact(out_dir, "vae.ckpt"), p, "vae_policy", digest);
  } else if (method == "gan") {
    const GanPair gan = train_gan_bc(demos, train_config_for_role(cfg, "gan"), rng);
    save_policy(artifact(out_dir, "gan.ckpt"), gan.generator, "gan_generator", digest);
    Checkpoint disc;
    disc.meta.set("role", "gan_disc");
    disc.meta.set("config_digest", digest);
    std::string dims;
    for (std::size_t i = 0; i < gan.discriminator.layer_dims.size(); ++i) {
      if (i) dims += ',';
      dims += std::to_string(gan.discriminator.layer_dims[i]);
    }
    disc.meta.set("layer_dims", dims);
    disc.params = gan.discriminator.params;
    save_checkpoint(artifact(out_dir, "gan_disc.ckpt"), disc);
  } else {
    throw ConfigError("unknown baseline method: " + method);
  }
  std::cout << method << ",trained\n";
}

envs::EvalReport evaluate_method(const Config& cfg, const std::string& out_dir,
                                 const std::string& method, envs::GoalBand band) {
  const EnvKind env = env_from_config(cfg);
  envs::Actor actor;
  int state_dim = 0;

  if (method == "dbc") {
    const Policy p = load_policy(require_artifact(out_dir, "policy.ckpt"));
    state_dim = p.state_dim;
    actor = policy_actor(p);
  } else if (method == "bc" || method == "ebm" || method == "vae" || method == "gan" ||
             method == "bc-aug") {
    const std::string file = method == "bc-aug" ? "bc_aug.ckpt" : method + ".ckpt";
    const Policy p = load_policy(require_artifact(out_dir, file));
    state_dim = p.state_dim;
    actor = policy_actor(p);
  } else if (method == "ibc") {
    const EnergyModel e = load_energy_model(require_artifact(out_dir, "ibc.ckpt"));
    state_dim = e.state_dim;
    const TrainConfig tc = train_config_for_role(cfg, "ibc");
    actor = [e, tc](const Vector& obs, int /*step*/, Rng& rng) {
      return act_ibc(e, obs, rng, tc.ibc_samples, tc.ibc_iters);
    };
  } else if (method == "dp") {
    const CondDiffusionPolicy dp = load_diffusion_policy(require_artifact(out_dir, "dp.ckpt"));
    state_dim = dp.state_dim;
    actor = [dp](const Vector& obs, int /*step*/, Rng& rng) {
      return act_diffusion_policy(dp, obs, rng);
    };
  } else if (method == "expert") {
    actor = env.is_maze ? envs::maze_expert_actor() : envs::spiral_expert_actor();
  } else {
    throw ConfigError("unknown eval method: " + method);
  }

  envs::EvalReport report = run_eval(cfg, env, actor, band, state_dim);
  report.method = method;
  report.config_digest = cfg.digest();
  emit_report(report, artifact(out_dir, "eval_" + method + "_" + to_string(band) + ".csv"));
  print_summary(report);
  return report;
}

void sweep(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<double> lambdas;
  {
    std::stringstream ss(cfg.get_string("sweep_lambdas", "0,30,300"));
    std::string tok;
    while (std::getline(ss, tok, ',')) lambdas.push_back(std::stod(tok));
  }
  const int n_seeds = static_cast<int>(cfg.get_long("sweep_seeds", 3));
  const std::uint64_t base_seed = cfg.get_u64("seed", 0);
  const envs::GoalBand band =
      envs::goal_band_from_string(cfg.get_string("sweep_band", "eval"));

  std::string csv = "lambda,seed,band,success_rate,mean_len\n";
  for (int k = 0; k < n_seeds; ++k) {
    Config run = cfg;
    run.set("seed", std::to_string(base_seed + static_cast<std::uint64_t>(k)));
    const std::string run_dir = artifact(out_dir, "sweep_seed" + std::to_string(k));
    gen_demos(run, run_dir);
    train_dm(run, run_dir);
    for (double lambda : lambdas) {
      Config lrun = run;
      char lbuf[32];
      std::snprintf(lbuf, sizeof lbuf, "%.17g", lambda);
      lrun.set("lambda", lbuf);
      train_policy_stage(lrun, run_dir);
      const envs::EvalReport rep = evaluate_method(lrun, run_dir, "dbc", band);
      char row[160];
      std::snprintf(row, sizeof row, "%.6g,%llu,%s,%.4f,%.4f\n", lambda,
                    static_cast<unsigned long long>(base_seed + k), rep.band.c_str(),
                    rep.success_rate, rep.mean_episode_length);
      csv += row;
    }
  }
  write_file_atomic(artifact(out_dir, "sweep.csv"), csv);
  std::cout << "sweep,done," << lambdas.size() << " lambdas," << n_seeds << " seeds\n";
}

void field(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const NoiseModel phi = load_noise_model(require_artifact(out_dir, "dm.ckpt"));

  GradientFieldSpec spec;
  spec.dim_x = static_cast<int>(cfg.get_long("field_dim_x", 0));
  spec.dim_y = static_cast<int>(cfg.get_long("field_dim_y", 1));
  spec.nx = static_cast<int>(cfg.get_long("field_nx", 20));
  spec.ny = static_cast<int>(cfg.get_long("field_ny", 20));
  spec.x_min = cfg.get_double("field_x_min", 0.0);
  spec.x_max = cfg.get_double("field_x_max", 5.0);
  spec.y_min = cfg.get_double("field_y_min", 0.0);
  spec.y_max = cfg.get_double("field_y_max", 5.0);
  const int n = static_cast<int>(cfg.get_long("field_noise_level", phi.sched.steps / 2));

  Vector fixed;
  if (cfg.has("field_fixed")) {
    std::vector<double> vals;
    std::stringstream ss(cfg.get_string("field_fixed", ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    fixed.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) fixed(static_cast<Eigen::Index>(i)) = vals[i];
  } else if (file_exists(artifact(out_dir, "demos.csv"))) {
    const DemoDataset demos = load_dataset(artifact(out_dir, "demos.csv"));
    fixed.resize(phi.data_dim());
    fixed << demos.stats.state_mean, demos.stats.action_mean;
  } else {
    fixed = Vector::Zero(phi.data_dim());
  }

  const auto rows = gradient_field(phi, spec, n, fixed);
  write_file_atomic(artifact(out_dir, "field.csv"), gradient_field_csv(rows));
  std::cout << "field," << rows.size() << " rows\n";
}

void augment(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const DemoDataset demos = load_demos(cfg, out_dir);
  const NoiseModel phi = load_noise_model(require_artifact(out_dir, "dm.ckpt"));

  Rng aug_rng = Rng(cfg.get_u64("seed", 0)).stream("augment");
  const Matrix synth = sample(phi, demos.rows(), aug_rng);

  DemoDataset combined = demos;
  const long n0 = demos.rows();
  combined.states.conservativeResize(2 * n0, Eigen::NoChange);
  combined.actions.conservativeResize(2 * n0, Eigen::NoChange);
  int next_id = 0;
  for (int id : demos.traj_ids) next_id = std::max(next_id, id + 1);
  for (long r = 0; r < n0; ++r) {
    combined.states.row(n0 + r) = synth.row(r).leftCols(demos.state_dim);
    combined.actions.row(n0 + r) = synth.row(r).rightCols(demos.action_dim);
    combined.traj_ids.push_back(next_id + static_cast<int>(r));
    combined.steps.push_back(0);
  }
  combined.stats = compute_norm_stats(combined);
  save_dataset(artifact(out_dir, "augmented.csv"), combined);

  Rng rng = Rng(cfg.get_u64("seed", 0)).stream("bc-aug-train");
  const Policy p = train_bc(combined, train_config_for_role(cfg, "bc"), rng);
  save_policy(artifact(out_dir, "bc_aug.ckpt"), p, "bc", cfg.digest());
  std::cout << "augment," << n0 << " synthetic pairs,bc_aug trained\n";
}

}  // namespace experiment

}  // namespace dbc
