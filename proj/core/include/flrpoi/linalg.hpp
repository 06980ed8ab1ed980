#pragma once

#include <Eigen/Dense>

namespace flrpoi::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values(k)
};

// Full eigendecomposition of a symmetric matrix (lower triangle is read).
// Throws EigenFailure.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a);

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

}  // namespace flrpoi::linalg
