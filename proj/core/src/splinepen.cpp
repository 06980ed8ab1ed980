#include "flrpoi/splinepen.hpp"

#include <cmath>
#include <string>

#include "flrpoi/error.hpp"
#include "flrpoi/linalg.hpp"

namespace flrpoi {

Eigen::MatrixXd build_projection(const Grid& grid, int order) {
  const auto p = static_cast<Eigen::Index>(grid.size());
  if (order < 1 || order > 5 || order > p) {
    fail(ErrorKind::InvalidArgument, "polynomial order must lie in [1, min(5, p)], got " +
                                         std::to_string(order));
  }
  Eigen::MatrixXd w(p, order);
  for (Eigen::Index j = 0; j < p; ++j) {
    double power = 1.0;
    for (int l = 0; l < order; ++l) {
      w(j, l) = power;
      power *= grid[static_cast<std::size_t>(j)];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
  qr.setThreshold(1e-12);
  if (qr.rank() < order) fail(ErrorKind::SingularBasis, "polynomial basis W'W is singular");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, order);
  return linalg::symmetrized(q * q.transpose());
}

Eigen::MatrixXd natural_spline_second_derivatives(const Grid& grid) {
  const auto p = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index m = p - 2;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd qt = Eigen::MatrixXd::Zero(m, p);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = k + 1;
    const double h_prev = grid[static_cast<std::size_t>(j)] - grid[static_cast<std::size_t>(j - 1)];
    const double h_next = grid[static_cast<std::size_t>(j + 1)] - grid[static_cast<std::size_t>(j)];
    r(k, k) = (h_prev + h_next) / 3.0;
    if (k + 1 < m) {
      r(k, k + 1) = h_next / 6.0;
      r(k + 1, k) = h_next / 6.0;
    }
    qt(k, j - 1) = 1.0 / h_prev;
    qt(k, j) = -1.0 / h_prev - 1.0 / h_next;
    qt(k, j + 1) = 1.0 / h_next;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularBasis, "spline moment system is singular");

  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
  second.middleRows(1, m) = llt.solve(qt);
  return second;
}

Eigen::MatrixXd build_curvature(const Grid& grid) {
  const auto p = static_cast<Eigen::Index>(grid.size());
  const Eigen::MatrixXd second = natural_spline_second_derivatives(grid);

  // b_i'' is linear on each interval, so the integral of a product over
  // [t_j, t_j+1] is h/3 (a_j c_j + a_j+1 c_j+1) + h/6 (a_j c_j+1 + a_j+1 c_j).
  Eigen::MatrixXd mass_times_second = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    const double h = grid[static_cast<std::size_t>(j + 1)] - grid[static_cast<std::size_t>(j)];
    mass_times_second.row(j) += (h / 3.0) * second.row(j) + (h / 6.0) * second.row(j + 1);
    mass_times_second.row(j + 1) += (h / 6.0) * second.row(j) + (h / 3.0) * second.row(j + 1);
  }
  return linalg::symmetrized(second.transpose() * mass_times_second);
}

PenaltyBundle build_penalty(const Grid& grid, int order) {
  PenaltyBundle bundle;
  bundle.order = order;
  bundle.projection = build_projection(grid, order);
  bundle.curvature = build_curvature(grid);
  bundle.combined = linalg::symmetrized(bundle.projection +
                                        static_cast<double>(grid.size()) * bundle.curvature);
  Eigen::LLT<Eigen::MatrixXd> llt(bundle.combined);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::SingularBasis, "combined penalty is not positive definite");
  }
  return bundle;
}

}  // namespace flrpoi
