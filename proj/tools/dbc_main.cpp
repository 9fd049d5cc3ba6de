#include <CLI11.hpp>
#include <iostream>

#include "dbc/experiment.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 format error, 4 dependency error
int run(int argc, char** argv) {
  CLI::App app{"Imitation-learning toolkit: diffusion-guided behavioral cloning and baselines"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;

  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--out", out_dir, "artifact directory");
  app.add_option("--seed", seed, "base seed (overrides the config's)")
      ->each([&seed_given](const std::string&) { seed_given = true; });

  auto* gen = app.add_subcommand("gen-demos", "collect scripted-expert demonstrations");
  auto* tdm = app.add_subcommand("train-dm", "train the diffusion model on demos");
  auto* tpol = app.add_subcommand("train-policy", "train the guided policy (dbc)");
  auto* tbase = app.add_subcommand("train-baseline", "train a baseline method");
  std::string method;
  tbase->add_option("--method", method, "bc|ibc|dp|ebm|vae|gan")->required();
  auto* eval = app.add_subcommand("eval", "evaluate a trained method");
  std::string eval_method = "dbc";
  std::string band = "train";
  eval->add_option("--method", eval_method, "bc|ibc|dp|ebm|vae|gan|dbc|bc-aug|expert");
  eval->add_option("--band", band, "train|eval")->required();
  auto* sweep = app.add_subcommand("sweep", "lambda sweep with paired seeds");
  auto* field = app.add_subcommand("field", "export the learned gradient field as CSV");
  auto* augment = app.add_subcommand("augment", "diffusion-model data augmentation + BC");

  CLI11_PARSE(app, argc, argv);

  dbc::Config cfg =
      config_path.empty() ? dbc::Config() : dbc::Config::parse_file(config_path);
  if (seed_given) cfg.set("seed", std::to_string(seed));

  if (gen->parsed()) dbc::experiment::gen_demos(cfg, out_dir);
  if (tdm->parsed()) dbc::experiment::train_dm(cfg, out_dir);
  if (tpol->parsed()) dbc::experiment::train_policy_stage(cfg, out_dir);
  if (tbase->parsed()) dbc::experiment::train_baseline(cfg, out_dir, method);
  if (eval->parsed()) {
    dbc::experiment::evaluate_method(cfg, out_dir, eval_method,
                                     dbc::envs::goal_band_from_string(band));
  }
  if (sweep->parsed()) dbc::experiment::sweep(cfg, out_dir);
  if (field->parsed()) dbc::experiment::field(cfg, out_dir);
  if (augment->parsed()) dbc::experiment::augment(cfg, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dbc::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const dbc::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
