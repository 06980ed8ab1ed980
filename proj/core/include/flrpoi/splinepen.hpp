#pragma once

// Roughness penalty for the smoothing-spline slope estimator: projection onto
// low-order polynomials plus the integrated squared second derivative of the
// natural cubic interpolating spline.

#include <Eigen/Dense>

#include "flrpoi/funspace.hpp"

namespace flrpoi {

struct PenaltyBundle {
  Eigen::MatrixXd projection;  // P, projects onto polynomials of degree < order
  Eigen::MatrixXd curvature;   // A*, v'A*v = integral of (s_v'')^2
  Eigen::MatrixXd combined;    // A = P + p A*
  int order = 2;

  Eigen::Index size() const noexcept { return combined.rows(); }
};

// P = W (W'W)^{-1} W' with W = (t_j^l), l = 0..order-1. Throws SingularBasis.
Eigen::MatrixXd build_projection(const Grid& grid, int order);

// Second derivatives at the knots of the natural cubic spline interpolating
// each unit vector: column i holds b_i'' at t_0..t_{p-1}. End rows are zero.
Eigen::MatrixXd natural_spline_second_derivatives(const Grid& grid);

// A* for the interpolation basis b_i(t_j) = delta_ij, so B = I and
// A* = int b''(t) b''(t)' dt, integrated exactly per interval.
Eigen::MatrixXd build_curvature(const Grid& grid);

PenaltyBundle build_penalty(const Grid& grid, int order = 2);

}  // namespace flrpoi
