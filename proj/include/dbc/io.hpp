#pragma once

#include <string>

#include "dbc/config.hpp"
#include "dbc/dataset.hpp"
#include "dbc/diffusion.hpp"
#include "dbc/diffusion_policy.hpp"
#include "dbc/ebm.hpp"
#include "dbc/envs.hpp"
#include "dbc/policy.hpp"
#include "dbc/vae.hpp"

namespace dbc {

/// Whole-file atomic write (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

// ---- dataset CSV: header traj_id,t,s0..,a0.. with 9 significant digits ----

std::string dataset_csv(const DemoDataset& ds);
void save_dataset(const std::string& path, const DemoDataset& ds);
DemoDataset load_dataset(const std::string& path);

// ---- checkpoints: DBCCKPT1 magic, metadata text, little-endian params ----

inline constexpr char kCheckpointMagic[9] = "DBCCKPT1";

struct Checkpoint {
  Config meta;    // layer dims, activation tags, role, norm stats, digest
  Vector params;  // flat, layer order
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

void save_policy(const std::string& path, const Policy& policy, const std::string& role,
                 const std::string& config_digest);
Policy load_policy(const std::string& path);

void save_noise_model(const std::string& path, const NoiseModel& phi,
                      const std::string& config_digest);
NoiseModel load_noise_model(const std::string& path);

void save_energy_model(const std::string& path, const EnergyModel& ebm,
                       const std::string& config_digest);
EnergyModel load_energy_model(const std::string& path);

void save_diffusion_policy(const std::string& path, const CondDiffusionPolicy& dp,
                           const std::string& config_digest);
CondDiffusionPolicy load_diffusion_policy(const std::string& path);

void save_vae(const std::string& enc_path, const std::string& dec_path, const VaeModel& vae,
              const std::string& config_digest);
VaeModel load_vae(const std::string& enc_path, const std::string& dec_path);

// ---- evaluation reports ----

std::string report_csv(const envs::EvalReport& report);
/// `method,band,success_rate,mean_len,seed` with 4-decimal rates.
std::string report_summary(const envs::EvalReport& report);
void emit_report(const envs::EvalReport& report, const std::string& path);

}  // namespace dbc
