#pragma once

#include <vector>

#include "dbc/rng.hpp"

namespace dbc {

/// Cycles through seeded shuffles of [0, n), handing out fixed-size index
/// batches; reshuffles whenever fewer than a full batch remains. Batch
/// order is therefore a pure function of the stream seed.
class BatchSampler {
 public:
  BatchSampler(long n, int batch, Rng rng);
  const std::vector<long>& next();

 private:
  void reshuffle();

  std::vector<long> perm_;
  std::vector<long> batch_out_;
  long pos_ = 0;
  long n_;
  int batch_;
  Rng rng_;
};

}  // namespace dbc
