#pragma once

#include <string>

#include "dbc/config.hpp"
#include "dbc/envs.hpp"
#include "dbc/io.hpp"

namespace dbc {

/// Guided-policy trainers for the generative-model comparison: cloning
/// loss plus the frozen model's guidance term.
Policy train_policy_with_ebm(const DemoDataset& dataset, const EnergyModel& ebm,
                             const TrainConfig& cfg, Rng& rng);
Policy train_policy_with_vae(const DemoDataset& dataset, const VaeModel& vae,
                             const TrainConfig& cfg, Rng& rng);

/// Pipeline stages behind the CLI subcommands. Artifacts live in out_dir
/// under conventional names (demos.csv, dm.ckpt, policy.ckpt, ...); a
/// missing upstream artifact raises DependencyError naming the file.
namespace experiment {

void gen_demos(const Config& cfg, const std::string& out_dir);
void train_dm(const Config& cfg, const std::string& out_dir);
void train_policy_stage(const Config& cfg, const std::string& out_dir);
void train_baseline(const Config& cfg, const std::string& out_dir, const std::string& method);
envs::EvalReport evaluate_method(const Config& cfg, const std::string& out_dir,
                                 const std::string& method, envs::GoalBand band);
void sweep(const Config& cfg, const std::string& out_dir);
void field(const Config& cfg, const std::string& out_dir);
void augment(const Config& cfg, const std::string& out_dir);

}  // namespace experiment

}  // namespace dbc
