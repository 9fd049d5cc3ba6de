#pragma once

#include "dbc/dataset.hpp"
#include "dbc/mlp.hpp"

namespace dbc {

/// Deterministic state -> action map. The network runs in normalized
/// space; stats translate at the interface (identity when normalization
/// was disabled during training).
struct Policy {
  MlpModel net;
  int state_dim = 0;
  int action_dim = 0;
  NormStats stats;
};

/// Single forward pass on one raw state; no sampling.
Vector act(const Policy& policy, const Vector& state);

}  // namespace dbc
