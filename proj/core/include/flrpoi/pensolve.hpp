#pragma once

// Penalized smoothing-spline estimation of the slope function with optional
// points of impact appended as unpenalized columns.
//
// For a PoI index set T the augmented design is X_T = [Xc | p Xc(t_s) ...] and
// the coefficients solve
//     ((np)^-1 X_T'X_T + rho A_T) theta = n^-1 X_T'Yc,
// where A_T carries the spline penalty A in its top-left block and zeros for
// the PoI coefficients. The smoother is H = (np)^-1 X_T C^-1 X_T'.
//
// Two routes are provided. The direct route factors C for one rho. The
// spectral route (SmootherBasis + SpectralSmoother) diagonalizes the PoI-free
// smoother once per dataset and then evaluates RSS, Tr(H) and Tr(H'H) for any
// PoI set and rho cheaply; GCV searches use it.

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "flrpoi/splinepen.hpp"

namespace flrpoi {

struct AugmentedDesign {
  Eigen::MatrixXd xt;        // n x (p + S)
  Eigen::MatrixXd penalty;   // (p + S) x (p + S), A in the top-left block
  std::vector<std::size_t> poi_indices;
  std::size_t grid_size = 0;

  std::size_t n() const noexcept { return static_cast<std::size_t>(xt.rows()); }
  std::size_t poi_count() const noexcept { return poi_indices.size(); }
};

// Throws DuplicatePoI or InvalidArgument for out-of-range indices. An empty
// index list gives the plain smoothing-spline design.
AugmentedDesign augment(const Eigen::MatrixXd& xc, const PenaltyBundle& penalty,
                        const std::vector<std::size_t>& poi_indices);

struct SlopeEstimate {
  Eigen::VectorXd beta_grid;  // beta-hat(t_j), j = 0..p-1
  Eigen::VectorXd beta_poi;   // one coefficient per PoI, in design order
  double rho = 0.0;
  double gcv_value = 0.0;
  double edf = 0.0;             // Tr(H'H)
  double rss = 0.0;
  double smoother_trace = 0.0;  // Tr(H)
};

struct SmootherStats {
  double rss = 0.0;
  double trace_h = 0.0;
  double trace_hth = 0.0;
};

// Solves the normal equations for a single rho. gcv_value, edf and
// smoother_trace are left as NaN. Throws SingularSystem.
SlopeEstimate fit_penalized(const AugmentedDesign& design, const Eigen::VectorXd& yc, double rho);

// Direct computation via C^-1 X_T'X_T; O((p+S)^3) per call.
SmootherStats smoother_trace_and_rss(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                                     double rho);

// (rss / n) / (1 - Tr(H) / n)^2
double gcv_criterion(const SmootherStats& stats, std::size_t n);

// Square roots of diag(sigma2 n^-2 C^-1 X_T'X_T C^-1). When sigma2 is not
// given it is estimated as rss / max(1, n - Tr(H'H)).
Eigen::VectorXd standard_errors(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                                double rho, std::optional<double> sigma2_hat = std::nullopt);

struct RhoGrid {
  double min = 1e-6;
  double max = 200.0;
  int points = 30;
  bool refine = true;  // golden-section pass between the minimizer's neighbours

  // Log-spaced, ascending. A single point yields {min}.
  std::vector<double> values() const;
};

// Eigendecomposition A = V diag(d) V' of the spline penalty (Demmler-Reinsch
// basis). Depends only on the grid, so one instance can be shared read-only
// across datasets and threads. Whitening with V diag(d)^-1/2 keeps each column
// at full relative precision even though A itself is badly conditioned.
struct PenaltySpectrum {
  Eigen::MatrixXd penalty;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Throws SingularBasis if A is not positive definite.
std::shared_ptr<const PenaltySpectrum> decompose_penalty(const Eigen::MatrixXd& penalty);

// Per-dataset quantities shared by every PoI set: Xc'Xc, Xc'Yc, the whitened
// design B = (np)^-1/2 Xc V diag(d)^-1/2, and the singular structure of B,
// which diagonalizes the PoI-free smoother H0 = B (B'B + rho)^-1 B'.
class SmootherBasis {
 public:
  SmootherBasis(Eigen::MatrixXd xc, Eigen::VectorXd yc,
                std::shared_ptr<const PenaltySpectrum> spectrum);

  const Eigen::MatrixXd& xc() const noexcept { return xc_; }
  const Eigen::VectorXd& yc() const noexcept { return yc_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::VectorXd& cross() const noexcept { return cross_; }
  const PenaltySpectrum& spectrum() const noexcept { return *spectrum_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(xc_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(xc_.cols()); }

  // Squared singular values of B above the noise cutoff, with the matching
  // left (n x r) and right (p x r) singular vectors.
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const Eigen::MatrixXd& left() const noexcept { return left_; }
  const Eigen::MatrixXd& right() const noexcept { return right_; }
  // U'Yc and the squared norm of the part of Yc outside span(U).
  const Eigen::VectorXd& response_coords() const noexcept { return y_coords_; }
  double response_residual_norm2() const noexcept { return y_perp_norm2_; }

 private:
  Eigen::MatrixXd xc_;
  Eigen::VectorXd yc_;
  std::shared_ptr<const PenaltySpectrum> spectrum_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd cross_;
  Eigen::VectorXd values_;
  Eigen::MatrixXd left_;
  Eigen::MatrixXd right_;
  Eigen::VectorXd y_coords_;
  double y_perp_norm2_ = 0.0;
};

// Smoother statistics for one PoI set. With Z the raw PoI columns, the
// unpenalized columns enter through
//     H = H0 + (I - H0) Z G^-1 Z'(I - H0),   G = Z'(I - H0) Z,
// so each rho costs O(r S^2) on top of the shared basis.
class SpectralSmoother {
 public:
  // Throws SingularSystem if the PoI columns are linearly dependent.
  SpectralSmoother(const SmootherBasis& basis, std::vector<std::size_t> poi_indices);

  SmootherStats stats(double rho) const;
  double gcv(double rho) const;
  bool admissible(double rho) const;  // Tr(H)/n < 1

  // Coefficients at rho through the singular structure.
  SlopeEstimate coefficients(double rho) const;

  const std::vector<std::size_t>& poi_indices() const noexcept { return poi_indices_; }
  const SmootherBasis& basis() const noexcept { return *basis_; }

 private:
  struct RhoTerms;
  RhoTerms evaluate(double rho) const;

  const SmootherBasis* basis_;
  std::vector<std::size_t> poi_indices_;
  Eigen::MatrixXd z_coords_;     // U'Z, r x S
  Eigen::MatrixXd z_perp_gram_;  // Z_perp'Z_perp
  Eigen::VectorXd z_perp_y_;     // Z_perp'Yc
};

// GCV-optimal fit. Coefficients come from the direct normal-equation solve at
// rho_GCV; ties in GCV go to the larger rho. Throws AllRhoInvalid.
SlopeEstimate optimize_gcv(const SpectralSmoother& smoother, const RhoGrid& grid);
SlopeEstimate optimize_gcv(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                           const RhoGrid& grid);

}  // namespace flrpoi
