#pragma once

#include <cstdint>
#include <string_view>

#include "dbc/matrix.hpp"

namespace dbc {

/// Counter-based deterministic RNG. Output depends only on (seed, counter),
/// so a stream can be replayed from its seed and split into independent
/// substreams by id or name. Gaussians come from Box-Muller on the counter
/// stream; each draw consumes exactly two uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  /// Independent deterministic substream identified by (seed, stream_id).
  Rng stream(std::uint64_t stream_id) const;
  /// Named substream; the name is hashed (FNV-1a) into a stream id.
  Rng stream(std::string_view name) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double gaussian();
  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

  Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  Matrix uniform_matrix(double lo, double hi, Eigen::Index rows, Eigen::Index cols);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t fnv1a64(std::string_view s);

}  // namespace dbc
