#include "flrpoi/linalg.hpp"

#include "flrpoi/error.hpp"

namespace flrpoi::linalg {

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) fail(ErrorKind::EigenFailure, "matrix is not square");
  SymmetricEigen out;
  if (a.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(ErrorKind::EigenFailure, "eigensolver did not converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

}  // namespace flrpoi::linalg
