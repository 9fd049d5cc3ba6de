#pragma once

#include <Eigen/Dense>

#include "dbc/errors.hpp"

namespace dbc {

// Row-major so flat parameter blocks map onto weight matrices directly.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw StateError(std::string(what) + ": non-finite entries");
  }
}

inline void require_cols(const Eigen::Ref<const Matrix>& m, Eigen::Index cols, const char* what) {
  if (m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(cols) +
                     " columns, got " + std::to_string(m.cols()));
  }
}

inline void require_same_shape(const Eigen::Ref<const Matrix>& a,
                               const Eigen::Ref<const Matrix>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

}  // namespace dbc
