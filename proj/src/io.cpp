#include "dbc/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dbc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint params are little-endian; big-endian hosts need byte swaps");

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

namespace {

void append_g9(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

std::string join_g17(const Vector& v) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", v(i));
    out += buf;
  }
  return out;
}

Vector parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw FormatError(what + ": bad number '" + tok + "'", 0);
    }
  }
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw FormatError(what + ": bad integer '" + tok + "'", 0);
    }
  }
  return vals;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string dataset_csv(const DemoDataset& ds) {
  std::string out = "traj_id,t";
  for (int j = 0; j < ds.state_dim; ++j) out += ",s" + std::to_string(j);
  for (int j = 0; j < ds.action_dim; ++j) out += ",a" + std::to_string(j);
  out += '\n';
  for (long r = 0; r < ds.rows(); ++r) {
    out += std::to_string(ds.traj_ids[static_cast<std::size_t>(r)]);
    out += ',';
    out += std::to_string(ds.steps[static_cast<std::size_t>(r)]);
    for (int j = 0; j < ds.state_dim; ++j) {
      out += ',';
      append_g9(out, ds.states(r, j));
    }
    for (int j = 0; j < ds.action_dim; ++j) {
      out += ',';
      append_g9(out, ds.actions(r, j));
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const std::string& path, const DemoDataset& ds) {
  write_file_atomic(path, dataset_csv(ds));
}

DemoDataset load_dataset(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError("dataset: empty file", 0);
  }
  int state_dim = 0, action_dim = 0;
  {
    std::stringstream hs(header);
    std::string col;
    int i = 0;
    while (std::getline(hs, col, ',')) {
      if (i == 0 && col != "traj_id") throw FormatError("dataset: bad header", 0);
      if (i == 1 && col != "t") throw FormatError("dataset: bad header", 0);
      if (i >= 2) {
        if (col == "s" + std::to_string(state_dim)) {
          ++state_dim;
        } else if (col == "a" + std::to_string(action_dim)) {
          ++action_dim;
        } else {
          throw FormatError("dataset: unexpected column '" + col + "'", 0);
        }
      }
      ++i;
    }
  }
  if (state_dim == 0 || action_dim == 0) {
    throw FormatError("dataset: header must list state and action columns", 0);
  }

  std::vector<int> traj_ids, steps;
  std::vector<double> flat;
  std::string line;
  std::size_t offset = header.size() + 1;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::stringstream ls(line);
    std::string tok;
    int col = 0;
    while (std::getline(ls, tok, ',')) {
      try {
        if (col == 0) {
          traj_ids.push_back(std::stoi(tok));
        } else if (col == 1) {
          steps.push_back(std::stoi(tok));
        } else {
          flat.push_back(std::stod(tok));
        }
      } catch (const std::exception&) {
        throw FormatError("dataset: bad value '" + tok + "'", offset);
      }
      ++col;
    }
    if (col != 2 + state_dim + action_dim) {
      throw FormatError("dataset: wrong column count", offset);
    }
    offset += line.size() + 1;
    ++rows;
  }

  DemoDataset ds;
  ds.state_dim = state_dim;
  ds.action_dim = action_dim;
  ds.traj_ids = std::move(traj_ids);
  ds.steps = std::move(steps);
  ds.states.resize(rows, state_dim);
  ds.actions.resize(rows, action_dim);
  const int width = state_dim + action_dim;
  for (long r = 0; r < rows; ++r) {
    for (int j = 0; j < state_dim; ++j) ds.states(r, j) = flat[static_cast<std::size_t>(r * width + j)];
    for (int j = 0; j < action_dim; ++j) {
      ds.actions(r, j) = flat[static_cast<std::size_t>(r * width + state_dim + j)];
    }
  }
  if (rows == 0) throw FormatError("dataset: no data rows", offset);
  ds.stats = compute_norm_stats(ds);
  return ds;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string meta = ckpt.meta.canonical_text();
  std::string out;
  out.reserve(12 + meta.size() + static_cast<std::size_t>(ckpt.params.size()) * 8);
  out.append(kCheckpointMagic, 8);
  const std::uint32_t len = static_cast<std::uint32_t>(meta.size());
  char lenbuf[4];
  std::memcpy(lenbuf, &len, 4);
  out.append(lenbuf, 4);
  out += meta;
  out.append(reinterpret_cast<const char*>(ckpt.params.data()),
             static_cast<std::size_t>(ckpt.params.size()) * 8);
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 8 || std::memcmp(data.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError("checkpoint " + path + ": bad magic", 0);
  }
  if (data.size() < 12) {
    throw FormatError("checkpoint " + path + ": truncated length field", data.size());
  }
  std::uint32_t len = 0;
  std::memcpy(&len, data.data() + 8, 4);
  if (data.size() < 12 + static_cast<std::size_t>(len)) {
    throw FormatError("checkpoint " + path + ": truncated metadata", data.size());
  }
  Checkpoint ckpt;
  ckpt.meta = Config::parse_string(data.substr(12, len));
  const std::size_t params_off = 12 + static_cast<std::size_t>(len);
  const std::size_t params_bytes = data.size() - params_off;
  if (params_bytes % 8 != 0) {
    throw FormatError("checkpoint " + path + ": parameter block not a multiple of 8 bytes",
                      params_off + params_bytes - params_bytes % 8);
  }
  ckpt.params.resize(static_cast<Eigen::Index>(params_bytes / 8));
  std::memcpy(ckpt.params.data(), data.data() + params_off, params_bytes);
  return ckpt;
}

namespace {

void put_common_meta(Config& meta, const std::string& role, const MlpModel& net, int state_dim,
                     int action_dim, const NormStats& stats, const std::string& digest) {
  meta.set("role", role);
  meta.set("layer_dims", join_ints(net.layer_dims));
  std::string acts;
  for (std::size_t i = 0; i < net.hidden_activations.size(); ++i) {
    if (i) acts += ',';
    acts += to_string(net.hidden_activations[i]);
  }
  meta.set("activations", acts);
  meta.set("state_dim", std::to_string(state_dim));
  meta.set("action_dim", std::to_string(action_dim));
  meta.set("state_mean", join_g17(stats.state_mean));
  meta.set("state_std", join_g17(stats.state_std));
  meta.set("action_mean", join_g17(stats.action_mean));
  meta.set("action_std", join_g17(stats.action_std));
  meta.set("config_digest", digest);
}

struct CommonMeta {
  std::string role;
  MlpModel net;
  int state_dim = 0;
  int action_dim = 0;
  NormStats stats;
};

CommonMeta read_common_meta(const std::string& path, const Checkpoint& ckpt,
                            const std::string& expected_role) {
  CommonMeta cm;
  cm.role = ckpt.meta.get_string("role", "");
  if (!expected_role.empty() && cm.role != expected_role) {
    throw FormatError("checkpoint " + path + ": role '" + cm.role + "', expected '" +
                          expected_role + "'",
                      12);
  }
  cm.net.layer_dims = parse_int_list(ckpt.meta.get_string("layer_dims", ""), "layer_dims");
  if (cm.net.layer_dims.size() < 2) {
    throw FormatError("checkpoint " + path + ": missing layer_dims", 12);
  }
  const std::string acts = ckpt.meta.get_string("activations", "");
  std::stringstream ss(acts);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    cm.net.hidden_activations.push_back(activation_from_string(tok));
  }
  if (cm.net.hidden_activations.size() != cm.net.layer_dims.size() - 2) {
    throw FormatError("checkpoint " + path + ": activation tags do not match depth", 12);
  }
  const long expect = mlp_param_count(cm.net.layer_dims);
  if (ckpt.params.size() != expect) {
    throw FormatError("checkpoint " + path + ": has " + std::to_string(ckpt.params.size()) +
                          " params, layer dims need " + std::to_string(expect),
                      12 + ckpt.meta.canonical_text().size());
  }
  cm.net.params = ckpt.params;
  cm.net.grads = Vector::Zero(expect);
  cm.state_dim = static_cast<int>(ckpt.meta.get_long("state_dim", 0));
  cm.action_dim = static_cast<int>(ckpt.meta.get_long("action_dim", 0));
  cm.stats.state_mean = parse_double_list(ckpt.meta.get_string("state_mean", ""), "state_mean");
  cm.stats.state_std = parse_double_list(ckpt.meta.get_string("state_std", ""), "state_std");
  cm.stats.action_mean = parse_double_list(ckpt.meta.get_string("action_mean", ""), "action_mean");
  cm.stats.action_std = parse_double_list(ckpt.meta.get_string("action_std", ""), "action_std");
  if (cm.stats.state_mean.size() != cm.state_dim || cm.stats.action_mean.size() != cm.action_dim) {
    throw FormatError("checkpoint " + path + ": normalization stats do not match dims", 12);
  }
  return cm;
}

}  // namespace

void save_policy(const std::string& path, const Policy& policy, const std::string& role,
                 const std::string& config_digest) {
  Checkpoint ckpt;
  put_common_meta(ckpt.meta, role, policy.net, policy.state_dim, policy.action_dim, policy.stats,
                  config_digest);
  ckpt.params = policy.net.params;
  save_checkpoint(path, ckpt);
}

Policy load_policy(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  CommonMeta cm = read_common_meta(path, ckpt, "");
  Policy p;
  p.net = std::move(cm.net);
  p.state_dim = cm.state_dim;
  p.action_dim = cm.action_dim;
  p.stats = cm.stats;
  return p;
}

void save_noise_model(const std::string& path, const NoiseModel& phi,
                      const std::string& config_digest) {
  Checkpoint ckpt;
  put_common_meta(ckpt.meta, "dm", phi.net, phi.state_dim, phi.action_dim, phi.stats,
                  config_digest);
  ckpt.meta.set("n_steps", std::to_string(phi.sched.steps));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", phi.sched.beta_start());
  ckpt.meta.set("beta_start", buf);
  std::snprintf(buf, sizeof buf, "%.17g", phi.sched.beta_end());
  ckpt.meta.set("beta_end", buf);
  std::snprintf(buf, sizeof buf, "%.17g", phi.noise_level);
  ckpt.meta.set("noise_level", buf);
  ckpt.params = phi.net.params;
  save_checkpoint(path, ckpt);
}

NoiseModel load_noise_model(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  CommonMeta cm = read_common_meta(path, ckpt, "dm");
  NoiseModel phi;
  phi.net = std::move(cm.net);
  phi.state_dim = cm.state_dim;
  phi.action_dim = cm.action_dim;
  phi.stats = cm.stats;
  phi.sched = make_schedule(static_cast<int>(ckpt.meta.get_long("n_steps", 100)),
                            ckpt.meta.get_double("beta_start", 1e-3),
                            ckpt.meta.get_double("beta_end", 0.2));
  phi.noise_level = ckpt.meta.get_double("noise_level", 0.0);
  return phi;
}

void save_energy_model(const std::string& path, const EnergyModel& ebm,
                       const std::string& config_digest) {
  Checkpoint ckpt;
  put_common_meta(ckpt.meta, "ebm", ebm.net, ebm.state_dim, ebm.action_dim, ebm.stats,
                  config_digest);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", ebm.action_lo);
  ckpt.meta.set("action_lo", buf);
  std::snprintf(buf, sizeof buf, "%.17g", ebm.action_hi);
  ckpt.meta.set("action_hi", buf);
  ckpt.params = ebm.net.params;
  save_checkpoint(path, ckpt);
}

EnergyModel load_energy_model(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  CommonMeta cm = read_common_meta(path, ckpt, "ebm");
  EnergyModel ebm;
  ebm.net = std::move(cm.net);
  ebm.state_dim = cm.state_dim;
  ebm.action_dim = cm.action_dim;
  ebm.stats = cm.stats;
  ebm.action_lo = ckpt.meta.get_double("action_lo", -1.0);
  ebm.action_hi = ckpt.meta.get_double("action_hi", 1.0);
  return ebm;
}

void save_diffusion_policy(const std::string& path, const CondDiffusionPolicy& dp,
                           const std::string& config_digest) {
  Checkpoint ckpt;
  put_common_meta(ckpt.meta, "dp", dp.net, dp.state_dim, dp.action_dim, dp.stats, config_digest);
  ckpt.meta.set("n_steps", std::to_string(dp.sched.steps));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", dp.sched.beta_start());
  ckpt.meta.set("beta_start", buf);
  std::snprintf(buf, sizeof buf, "%.17g", dp.sched.beta_end());
  ckpt.meta.set("beta_end", buf);
  ckpt.params = dp.net.params;
  save_checkpoint(path, ckpt);
}

CondDiffusionPolicy load_diffusion_policy(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  CommonMeta cm = read_common_meta(path, ckpt, "dp");
  CondDiffusionPolicy dp;
  dp.net = std::move(cm.net);
  dp.state_dim = cm.state_dim;
  dp.action_dim = cm.action_dim;
  dp.stats = cm.stats;
  dp.sched = make_schedule(static_cast<int>(ckpt.meta.get_long("n_steps", 100)),
                           ckpt.meta.get_double("beta_start", 1e-3),
                           ckpt.meta.get_double("beta_end", 0.2));
  return dp;
}

void save_vae(const std::string& enc_path, const std::string& dec_path, const VaeModel& vae,
              const std::string& config_digest) {
  Checkpoint enc;
  put_common_meta(enc.meta, "vae_encoder", vae.encoder, vae.state_dim, vae.action_dim, vae.stats,
                  config_digest);
  enc.meta.set("latent_dim", std::to_string(vae.latent_dim));
  enc.params = vae.encoder.params;
  save_checkpoint(enc_path, enc);

  Checkpoint dec;
  put_common_meta(dec.meta, "vae_decoder", vae.decoder, vae.state_dim, vae.action_dim, vae.stats,
                  config_digest);
  dec.meta.set("latent_dim", std::to_string(vae.latent_dim));
  dec.params = vae.decoder.params;
  save_checkpoint(dec_path, dec);
}

VaeModel load_vae(const std::string& enc_path, const std::string& dec_path) {
  const Checkpoint enc = load_checkpoint(enc_path);
  CommonMeta enc_cm = read_common_meta(enc_path, enc, "vae_encoder");
  const Checkpoint dec = load_checkpoint(dec_path);
  CommonMeta dec_cm = read_common_meta(dec_path, dec, "vae_decoder");
  VaeModel vae;
  vae.encoder = std::move(enc_cm.net);
  vae.decoder = std::move(dec_cm.net);
  vae.state_dim = enc_cm.state_dim;
  vae.action_dim = enc_cm.action_dim;
  vae.latent_dim = static_cast<int>(enc.meta.get_long("latent_dim", 128));
  vae.stats = enc_cm.stats;
  return vae;
}

std::string report_csv(const envs::EvalReport& report) {
  std::string out = "episode,success,length,final_dist\n";
  char buf[80];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g\n", r.episode, r.success ? 1 : 0, r.length,
                  r.final_goal_distance);
    out += buf;
  }
  return out;
}

std::string report_summary(const envs::EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%llu", report.method.c_str(),
                report.band.c_str(), report.success_rate, report.mean_episode_length,
                static_cast<unsigned long long>(report.base_seed));
  return buf;
}

void emit_report(const envs::EvalReport& report, const std::string& path) {
  write_file_atomic(path, report_csv(report));
}

}  // namespace dbc
