#pragma once

#include <functional>

#include "dbc/matrix.hpp"

namespace dbc::test {

/// Central finite differences of a scalar function over a flat vector.
inline Vector finite_diff_grad(const std::function<double(const Vector&)>& f, Vector x,
                               double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    const double up = f(x);
    x(i) = keep - h;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// Norm-relative disagreement: |a - b| / (|a| + |b|), 0 when both vanish.
inline double rel_error(const Vector& a, const Vector& b) {
  const double denom = a.norm() + b.norm();
  if (denom < 1e-12) return 0.0;
  return (a - b).norm() / denom;
}

}  // namespace dbc::test
