#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dbc/mlp.hpp"

namespace dbc {

/// Flat `key = value` configuration with `#` comments. Keys are unique;
/// the canonical text (sorted keys) feeds the run digest embedded in
/// every artifact.
class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  std::string canonical_text() const;
  /// FNV-1a over the canonical text, 16 hex digits.
  std::string digest() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Per-model training parameters extracted from a run config. Numeric
/// fields are range-checked on extraction, before any training starts.
struct TrainConfig {
  std::string role;  // dm | policy | bc | ibc | dp | ebm | vae | gan
  int layers = 4;    // linear layers
  int hidden = 256;
  Activation activation = Activation::kTanh;
  double lr = 5e-5;
  int batch = 128;
  long epochs = 2000;  // training iterations, one sampled batch each
  double lambda = 30.0;
  int n_steps = 100;
  double beta_start = 1e-3;
  double beta_end = 0.2;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  bool use_expert_normalization = true;
  bool share_noise = true;
  bool use_bc = true;
  bool lr_decay = false;
  bool normalize_data = true;
  double fraction = 1.0;
  // baseline knobs
  int n_neg = 64;
  double lambda_ebm = 0.1;
  double lambda_vae = 1.0;
  double lambda_gan = 0.2;
  int latent_dim = 128;
  int ibc_samples = 1000;
  int ibc_iters = 3;
  double action_box_lo = -1.0;
  double action_box_hi = 1.0;

  std::vector<int> layer_dims(int input_dim, int output_dim) const;
  void validate() const;
};

/// Builds the TrainConfig for one model role from `<role>_*` keys, falling
/// back to that role's defaults (the paper's Maze column).
TrainConfig train_config_for_role(const Config& cfg, const std::string& role);

}  // namespace dbc
