#include "dbc/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "dbc/errors.hpp"

namespace dbc {

BatchSampler::BatchSampler(long n, int batch, Rng rng)
    : n_(n), batch_(static_cast<int>(std::min<long>(batch, n))), rng_(rng) {
  if (n <= 0) throw ConfigError("BatchSampler: empty index range");
  perm_.resize(static_cast<std::size_t>(n));
  std::iota(perm_.begin(), perm_.end(), 0L);
  reshuffle();
}

void BatchSampler::reshuffle() {
  for (std::size_t i = perm_.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng_.next_below(i));
    std::swap(perm_[i - 1], perm_[j]);
  }
  pos_ = 0;
}

const std::vector<long>& BatchSampler::next() {
  if (pos_ + batch_ > n_) reshuffle();
  batch_out_.assign(perm_.begin() + pos_, perm_.begin() + pos_ + batch_);
  pos_ += batch_;
  return batch_out_;
}

}  // namespace dbc
