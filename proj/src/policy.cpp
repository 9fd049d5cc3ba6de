#include "dbc/policy.hpp"

namespace dbc {

Vector act(const Policy& policy, const Vector& state) {
  if (state.size() != policy.state_dim) {
    throw ShapeError("act: state has " + std::to_string(state.size()) + " dims, policy expects " +
                     std::to_string(policy.state_dim));
  }
  const Vector z = apply_norm(state, policy.stats.state_mean, policy.stats.state_std);
  const Matrix out = mlp_apply(policy.net, z.transpose());
  return invert_norm(out.row(0).transpose(), policy.stats.action_mean, policy.stats.action_std);
}

}  // namespace dbc
