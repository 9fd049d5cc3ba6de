#include "dbc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dbc/rng.hpp"

namespace dbc {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number from '" + it->second + "'");
  }
}

long Config::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + it->second + "'");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse seed from '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::string Config::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : values_) {  // std::map iterates sorted
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::string Config::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

std::vector<int> TrainConfig::layer_dims(int input_dim, int output_dim) const {
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int l = 0; l + 1 < layers; ++l) dims.push_back(hidden);
  dims.push_back(output_dim);
  return dims;
}

void TrainConfig::validate() const {
  if (layers < 1) throw ConfigError(role + ": layers must be >= 1");
  if (hidden < 1) throw ConfigError(role + ": hidden must be >= 1");
  if (!(lr > 0.0)) throw ConfigError(role + ": lr must be > 0");
  if (batch < 1) throw ConfigError(role + ": batch must be >= 1");
  if (epochs < 0) throw ConfigError(role + ": epochs must be >= 0");
  if (lambda < 0.0) throw ConfigError(role + ": lambda must be >= 0");
  if (n_steps < 1) throw ConfigError(role + ": n_steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ConfigError(role + ": need 0 < beta_start <= beta_end < 1");
  }
  if (noise_level < 0.0) throw ConfigError(role + ": noise_level must be >= 0");
  if (!(fraction > 0.0) || fraction > 1.0) throw ConfigError(role + ": fraction in (0, 1]");
  if (n_neg < 1) throw ConfigError(role + ": n_neg must be >= 1");
  if (latent_dim < 1) throw ConfigError(role + ": latent_dim must be >= 1");
  if (ibc_samples < 1) throw ConfigError(role + ": ibc_samples must be >= 1");
  if (ibc_iters < 1) throw ConfigError(role + ": ibc_iters must be >= 1");
  if (!(action_box_lo < action_box_hi)) {
    throw ConfigError(role + ": action box must have lo < hi");
  }
}

namespace {

struct RoleDefaults {
  int layers;
  int hidden;
  Activation activation;
  double lr;
  long epochs;
  bool lr_decay;
};

RoleDefaults defaults_for(const std::string& role) {
  if (role == "dm") return {5, 128, Activation::kRelu, 1e-4, 8000, false};
  if (role == "policy") return {4, 256, Activation::kTanh, 5e-5, 2000, true};
  if (role == "bc") return {4, 256, Activation::kTanh, 5e-5, 2000, true};
  if (role == "ibc") return {2, 1024, Activation::kRelu, 1e-4, 10000, false};
  if (role == "dp") return {5, 256, Activation::kRelu, 2e-4, 20000, false};
  if (role == "ebm") return {5, 128, Activation::kRelu, 5e-4, 8000, false};
  if (role == "vae") return {5, 128, Activation::kRelu, 1e-4, 100000, false};
  if (role == "gan") return {3, 256, Activation::kRelu, 5e-5, 2000, false};
  // policies guided by a frozen generative model
  if (role == "ebm_policy" || role == "vae_policy") {
    return {3, 256, Activation::kRelu, 5e-5, 2000, true};
  }
  throw ConfigError("unknown model role: " + role);
}

}  // namespace

TrainConfig train_config_for_role(const Config& cfg, const std::string& role) {
  const RoleDefaults d = defaults_for(role);
  TrainConfig t;
  t.role = role;
  const auto key = [&role](const char* field) { return role + "_" + field; };
  t.layers = static_cast<int>(cfg.get_long(key("layers"), d.layers));
  t.hidden = static_cast<int>(cfg.get_long(key("hidden"), d.hidden));
  t.activation =
      activation_from_string(cfg.get_string(key("activation"), to_string(d.activation)));
  t.lr = cfg.get_double(key("lr"), d.lr);
  t.batch = static_cast<int>(cfg.get_long(key("batch"), 128));
  t.epochs = cfg.get_long(key("epochs"), d.epochs);
  t.lambda = cfg.get_double("lambda", 30.0);
  t.n_steps = static_cast<int>(cfg.get_long("n_steps", 100));
  t.beta_start = cfg.get_double("beta_start", 1e-3);
  t.beta_end = cfg.get_double("beta_end", 0.2);
  t.seed = cfg.get_u64("seed", 0);
  t.noise_level = cfg.get_double(key("noise_level"), 0.0);
  t.use_expert_normalization = cfg.get_bool("use_expert_normalization", true);
  t.share_noise = cfg.get_bool("share_noise", true);
  t.use_bc = cfg.get_bool("use_bc", true);
  t.lr_decay = cfg.get_bool(key("lr_decay"), d.lr_decay);
  t.normalize_data = cfg.get_bool("normalize_data", true);
  t.fraction = cfg.get_double("fraction", 1.0);
  t.n_neg = static_cast<int>(cfg.get_long("n_neg", 64));
  t.lambda_ebm = cfg.get_double("lambda_ebm", 0.1);
  t.lambda_vae = cfg.get_double("lambda_vae", 1.0);
  t.lambda_gan = cfg.get_double("lambda_gan", 0.2);
  t.latent_dim = static_cast<int>(cfg.get_long("latent_dim", 128));
  t.ibc_samples = static_cast<int>(cfg.get_long("ibc_samples", 1000));
  t.ibc_iters = static_cast<int>(cfg.get_long("ibc_iters", 3));
  t.action_box_lo = cfg.get_double("action_box_lo", -1.0);
  t.action_box_hi = cfg.get_double("action_box_hi", 1.0);
  t.validate();
  return t;
}

}  // namespace dbc
