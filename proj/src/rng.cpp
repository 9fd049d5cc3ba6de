#include "dbc/rng.hpp"

#include <cmath>
#include <numbers>

namespace dbc {
namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng Rng::stream(std::uint64_t stream_id) const {
  return Rng(mix64(seed_ ^ (stream_id * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL)));
}

Rng Rng::stream(std::string_view name) const { return stream(fnv1a64(name)); }

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

double Rng::gaussian() {
  // 1-u keeps the log argument in (0, 1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  // Modulo bias is < 2^-50 for the ranges used here (n << 2^64).
  return next_u64() % n;
}

Matrix Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = gaussian();
    }
  }
  return m;
}

Matrix Rng::uniform_matrix(double lo, double hi, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = uniform(lo, hi);
    }
  }
  return m;
}

}  // namespace dbc
