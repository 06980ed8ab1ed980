#pragma once

// FPCA-based series estimator with points of impact: Y is regressed on the
// first K principal component scores plus a prefix of the PoI candidates,
// and (K, delta, prefix) are chosen jointly by BIC with K + |R| degrees of
// freedom.

#include <Eigen/Dense>
#include <cstddef>

#include "flrpoi/funspace.hpp"
#include "flrpoi/selector.hpp"

namespace flrpoi {

struct FpcaDecomposition {
  Eigen::VectorXd eigenvalues;     // descending
  Eigen::MatrixXd eigenfunctions;  // p x K, p^-1 ef_k . ef_l = delta_kl
  Eigen::MatrixXd scores;          // n x K, p^-1 Xc ef_k

  Eigen::Index components() const noexcept { return eigenvalues.size(); }
};

// Leading max_components eigenpairs of the discretized covariance operator
// n^-1 Xc'Xc / p. Requires max_components <= min(n, p).
FpcaDecomposition fpca(const Eigen::MatrixXd& xc, std::size_t max_components);

// Numerical rank used to cap K: eigenvalues above 1e-10 times the largest.
std::size_t fpca_rank(const FpcaDecomposition& f);

// Grid search over delta (cfg.delta_grid), K in [1, cfg.kps_max_components]
// and the candidate prefix. The result's estimate carries rss and
// edf = K + |R|; rho, GCV and the smoother trace are NaN.
FitResult kps_fit(const FunctionalDataset& ds, const SelectorConfig& cfg);

}  // namespace flrpoi
