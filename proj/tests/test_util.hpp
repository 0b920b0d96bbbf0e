#pragma once

#include <Eigen/Dense>

namespace testutil {

// Exact (bitwise) equality for dense matrices; Eigen's operator== is
// coefficient-wise, so tests use this instead.
inline bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

}  // namespace testutil
