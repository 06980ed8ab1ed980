#include "flrpoi/pensolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "flrpoi/error.hpp"
#include "flrpoi/linalg.hpp"

namespace flrpoi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCollinearTol = 1e-10;

void check_poi_indices(const std::vector<std::size_t>& indices, std::size_t p) {
  std::set<std::size_t> seen;
  for (auto j : indices) {
    if (j >= p) {
      fail(ErrorKind::InvalidArgument,
           "PoI index " + std::to_string(j) + " outside grid of size " + std::to_string(p));
    }
    if (!seen.insert(j).second) fail(ErrorKind::DuplicatePoI, "index " + std::to_string(j));
  }
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t s = 0; s < cols.size(); ++s) {
    out.col(static_cast<Eigen::Index>(s)) = m.col(static_cast<Eigen::Index>(cols[s]));
  }
  return out;
}

// Rank check on the unpenalized PoI columns; C is singular iff they are
// linearly dependent.
void require_independent(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, Eigen::Index cols) {
  if (cols == 0) return;
  const auto& r = qr.matrixR();
  const double lead = std::abs(r(0, 0));
  for (Eigen::Index s = 0; s < cols; ++s) {
    if (!(std::abs(r(s, s)) > kCollinearTol * lead) || lead == 0.0) {
      fail(ErrorKind::SingularSystem, "PoI columns are linearly dependent");
    }
  }
}

struct DirectSystem {
  Eigen::MatrixXd gram;  // X_T'X_T
  Eigen::VectorXd cross; // X_T'Yc
  Eigen::MatrixXd penalty;
  std::size_t n = 0;
  std::size_t p = 0;

  Eigen::MatrixXd lhs(double rho) const {
    const double np = static_cast<double>(n) * static_cast<double>(p);
    return linalg::symmetrized(gram / np + rho * penalty);
  }
};

Eigen::LLT<Eigen::MatrixXd> factor_lhs(const Eigen::MatrixXd& lhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(lhs);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::SingularSystem, "regularized normal matrix is not positive definite");
  }
  return llt;
}

// theta = n^-1 C^-1 X_T'Yc with one step of iterative refinement.
Eigen::VectorXd solve_direct(const DirectSystem& sys, double rho) {
  const Eigen::MatrixXd lhs = sys.lhs(rho);
  const auto llt = factor_lhs(lhs);
  const Eigen::VectorXd rhs = sys.cross / static_cast<double>(sys.n);
  Eigen::VectorXd theta = llt.solve(rhs);
  theta += llt.solve(rhs - lhs * theta);
  if (!theta.allFinite()) fail(ErrorKind::SingularSystem, "non-finite solution");
  return theta;
}

SlopeEstimate split_coefficients(const Eigen::VectorXd& theta, std::size_t p, double rho) {
  SlopeEstimate est;
  const auto pp = static_cast<Eigen::Index>(p);
  est.beta_grid = theta.head(pp);
  est.beta_poi = theta.tail(theta.size() - pp);
  est.rho = rho;
  est.gcv_value = kNaN;
  est.edf = kNaN;
  est.smoother_trace = kNaN;
  return est;
}

double residual_ss(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc,
                   const std::vector<std::size_t>& poi, const SlopeEstimate& est) {
  const double p = static_cast<double>(xc.cols());
  Eigen::VectorXd fitted = xc * est.beta_grid / p;
  for (std::size_t s = 0; s < poi.size(); ++s) {
    fitted += est.beta_poi(static_cast<Eigen::Index>(s)) * xc.col(static_cast<Eigen::Index>(poi[s]));
  }
  return (yc - fitted).squaredNorm();
}

DirectSystem direct_system(const AugmentedDesign& design, const Eigen::VectorXd& yc) {
  if (static_cast<std::size_t>(yc.size()) != design.n()) {
    fail(ErrorKind::ShapeMismatch, "response length differs from design rows");
  }
  DirectSystem sys;
  sys.gram = design.xt.transpose() * design.xt;
  sys.cross = design.xt.transpose() * yc;
  sys.penalty = design.penalty;
  sys.n = design.n();
  sys.p = design.grid_size;
  return sys;
}

void require_positive_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    fail(ErrorKind::InvalidArgument, "rho must be positive and finite");
  }
}

}  // namespace

AugmentedDesign augment(const Eigen::MatrixXd& xc, const PenaltyBundle& penalty,
                        const std::vector<std::size_t>& poi_indices) {
  const auto p = static_cast<std::size_t>(xc.cols());
  if (penalty.size() != xc.cols()) fail(ErrorKind::ShapeMismatch, "penalty size differs from p");
  check_poi_indices(poi_indices, p);
  const auto pp = static_cast<Eigen::Index>(p);
  const auto total = pp + static_cast<Eigen::Index>(poi_indices.size());

  AugmentedDesign design;
  design.grid_size = p;
  design.poi_indices = poi_indices;
  design.xt.resize(xc.rows(), total);
  design.xt.leftCols(pp) = xc;
  for (std::size_t s = 0; s < poi_indices.size(); ++s) {
    design.xt.col(pp + static_cast<Eigen::Index>(s)) =
        static_cast<double>(p) * xc.col(static_cast<Eigen::Index>(poi_indices[s]));
  }
  design.penalty = Eigen::MatrixXd::Zero(total, total);
  design.penalty.topLeftCorner(pp, pp) = penalty.combined;
  return design;
}

SlopeEstimate fit_penalized(const AugmentedDesign& design, const Eigen::VectorXd& yc, double rho) {
  require_positive_rho(rho);
  if (design.poi_count() > 0) {
    const auto s = static_cast<Eigen::Index>(design.poi_count());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.xt.rightCols(s));
    require_independent(qr, s);
  }
  const auto sys = direct_system(design, yc);
  const Eigen::VectorXd theta = solve_direct(sys, rho);
  auto est = split_coefficients(theta, design.grid_size, rho);
  est.rss = (yc - design.xt * theta / static_cast<double>(design.grid_size)).squaredNorm();
  return est;
}

SmootherStats smoother_trace_and_rss(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                                     double rho) {
  require_positive_rho(rho);
  const auto sys = direct_system(design, yc);
  const double np = static_cast<double>(sys.n) * static_cast<double>(sys.p);
  const auto llt = factor_lhs(sys.lhs(rho));
  // Tr(H) = Tr(C^-1 G) / np and, H being symmetric, Tr(H'H) = Tr((C^-1 G / np)^2).
  const Eigen::MatrixXd m = llt.solve(sys.gram) / np;
  SmootherStats stats;
  stats.trace_h = m.trace();
  stats.trace_hth = m.cwiseProduct(m.transpose()).sum();
  const Eigen::VectorXd theta = llt.solve(sys.cross / static_cast<double>(sys.n));
  stats.rss = (yc - design.xt * theta / static_cast<double>(sys.p)).squaredNorm();
  return stats;
}

double gcv_criterion(const SmootherStats& stats, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double denom = 1.0 - stats.trace_h / nn;
  return (stats.rss / nn) / (denom * denom);
}

Eigen::VectorXd standard_errors(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                                double rho, std::optional<double> sigma2_hat) {
  require_positive_rho(rho);
  double sigma2 = 0.0;
  if (sigma2_hat) {
    if (!(*sigma2_hat >= 0.0)) fail(ErrorKind::InvalidArgument, "sigma2_hat must be >= 0");
    sigma2 = *sigma2_hat;
  } else {
    const auto stats = smoother_trace_and_rss(design, yc, rho);
    sigma2 = stats.rss / std::max(1.0, static_cast<double>(design.n()) - stats.trace_hth);
  }
  const auto sys = direct_system(design, yc);
  const auto llt = factor_lhs(sys.lhs(rho));
  const Eigen::MatrixXd w = llt.solve(design.xt.transpose());
  const double nn = static_cast<double>(design.n());
  return (sigma2 * w.rowwise().squaredNorm() / (nn * nn)).cwiseSqrt();
}

std::vector<double> RhoGrid::values() const {
  if (points < 1 || !(min > 0.0) || !(max >= min)) {
    fail(ErrorKind::InvalidArgument, "rho grid needs points >= 1 and 0 < min <= max");
  }
  std::vector<double> out(static_cast<std::size_t>(points));
  if (points == 1) {
    out[0] = min;
    return out;
  }
  const double lo = std::log(min);
  const double hi = std::log(max);
  for (int i = 0; i < points; ++i) {
    out[static_cast<std::size_t>(i)] =
        i == points - 1 ? max : std::exp(lo + (hi - lo) * i / (points - 1));
  }
  out.front() = min;
  return out;
}

std::shared_ptr<const PenaltySpectrum> decompose_penalty(const Eigen::MatrixXd& penalty) {
  auto eig = linalg::symmetric_eigen(linalg::symmetrized(penalty));
  if (eig.values.size() == 0 || !(eig.values(0) > 0.0)) {
    fail(ErrorKind::SingularBasis, "penalty matrix is not positive definite");
  }
  auto out = std::make_shared<PenaltySpectrum>();
  out->penalty = penalty;
  out->values = std::move(eig.values);
  out->vectors = std::move(eig.vectors);
  return out;
}

SmootherBasis::SmootherBasis(Eigen::MatrixXd xc, Eigen::VectorXd yc,
                             std::shared_ptr<const PenaltySpectrum> spectrum)
    : xc_(std::move(xc)), yc_(std::move(yc)), spectrum_(std::move(spectrum)) {
  if (!spectrum_) fail(ErrorKind::InvalidArgument, "missing penalty spectrum");
  if (xc_.rows() != yc_.size()) fail(ErrorKind::ShapeMismatch, "Xc rows differ from Yc length");
  if (spectrum_->vectors.rows() != xc_.cols()) {
    fail(ErrorKind::ShapeMismatch, "penalty size differs from p");
  }
  gram_.noalias() = xc_.transpose() * xc_;
  cross_.noalias() = xc_.transpose() * yc_;

  const double np = static_cast<double>(n()) * static_cast<double>(p());
  const Eigen::VectorXd scale = (spectrum_->values.array() * np).rsqrt().matrix();
  Eigen::MatrixXd b;
  b.noalias() = xc_ * spectrum_->vectors;
  b = b * scale.asDiagonal();

  // Diagonalize whichever of BB' (n x n) and B'B (p x p) is smaller.
  const bool wide = xc_.rows() <= xc_.cols();
  Eigen::MatrixXd square;
  if (wide) {
    square.noalias() = b * b.transpose();
  } else {
    square.noalias() = b.transpose() * b;
  }
  auto eig = linalg::symmetric_eigen(linalg::symmetrized(square));

  // Eigenpairs below this level are rounding noise; their shrinkage factor is
  // negligible for every admissible rho, so they are treated as outside span(U).
  const double top = eig.values.size() > 0 ? std::max(eig.values.maxCoeff(), 0.0) : 0.0;
  const double cutoff = 1e-12 * top;
  Eigen::Index first = 0;
  while (first < eig.values.size() && !(eig.values(first) > cutoff)) ++first;
  const Eigen::Index active = eig.values.size() - first;
  values_ = eig.values.tail(active);
  const Eigen::VectorXd inv_root = values_.array().rsqrt().matrix();
  if (wide) {
    left_ = eig.vectors.rightCols(active);
    right_.noalias() = b.transpose() * left_;
    right_ = right_ * inv_root.asDiagonal();
  } else {
    right_ = eig.vectors.rightCols(active);
    left_.noalias() = b * right_;
    left_ = left_ * inv_root.asDiagonal();
  }
  y_coords_.noalias() = left_.transpose() * yc_;
  y_perp_norm2_ = (yc_ - left_ * y_coords_).squaredNorm();
}

struct SpectralSmoother::RhoTerms {
  Eigen::ArrayXd keep;    // rho / (lambda + rho), the spectrum of I - H0
  Eigen::VectorXd gamma;  // PoI coefficients on the raw columns
  Eigen::MatrixXd g_inv;
  bool ok = true;
};

SpectralSmoother::SpectralSmoother(const SmootherBasis& basis, std::vector<std::size_t> poi_indices)
    : basis_(&basis), poi_indices_(std::move(poi_indices)) {
  check_poi_indices(poi_indices_, basis.p());
  const auto s = static_cast<Eigen::Index>(poi_indices_.size());
  if (s == 0) return;
  const Eigen::MatrixXd z = select_columns(basis.xc(), poi_indices_);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  require_independent(qr, s);
  z_coords_.noalias() = basis.left().transpose() * z;
  Eigen::MatrixXd z_perp = z;
  z_perp.noalias() -= basis.left() * z_coords_;
  z_perp_gram_.noalias() = z_perp.transpose() * z_perp;
  z_perp_y_.noalias() = z_perp.transpose() * basis.yc();
}

SpectralSmoother::RhoTerms SpectralSmoother::evaluate(double rho) const {
  require_positive_rho(rho);
  RhoTerms t;
  const Eigen::ArrayXd lambda = basis_->values().array();
  t.keep = rho / (lambda + rho);
  if (poi_indices_.empty()) return t;
  const Eigen::MatrixXd weighted = t.keep.matrix().asDiagonal() * z_coords_;
  const Eigen::MatrixXd g = linalg::symmetrized(z_coords_.transpose() * weighted + z_perp_gram_);
  const Eigen::VectorXd rhs = weighted.transpose() * basis_->response_coords() + z_perp_y_;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    t.ok = false;
    return t;
  }
  t.g_inv = llt.solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  t.gamma = llt.solve(rhs);
  t.ok = t.gamma.allFinite();
  return t;
}

SmootherStats SpectralSmoother::stats(double rho) const {
  const auto t = evaluate(rho);
  SmootherStats out;
  if (!t.ok) {
    out.rss = out.trace_h = out.trace_hth = kNaN;
    return out;
  }
  const Eigen::ArrayXd& keep = t.keep;
  const Eigen::ArrayXd shrink = 1.0 - keep;
  out.trace_h = shrink.sum();
  out.trace_hth = shrink.square().sum();
  const auto& yt = basis_->response_coords();
  if (poi_indices_.empty()) {
    out.rss = (keep.square() * yt.array().square()).sum() + basis_->response_residual_norm2();
    return out;
  }
  // Residual (I - H0)(Y - Z gamma), split into span(U) and its complement.
  const Eigen::ArrayXd inner = keep * (yt - z_coords_ * t.gamma).array();
  out.rss = inner.square().sum() + basis_->response_residual_norm2() -
            2.0 * t.gamma.dot(z_perp_y_) + t.gamma.dot(z_perp_gram_ * t.gamma);
  out.rss = std::max(out.rss, 0.0);

  const Eigen::MatrixXd q2 =
      z_coords_.transpose() * (keep.square().matrix().asDiagonal() * z_coords_) + z_perp_gram_;
  const Eigen::MatrixXd mixed =
      z_coords_.transpose() * ((keep.square() * shrink).matrix().asDiagonal() * z_coords_);
  const Eigen::MatrixXd e = t.g_inv * q2;
  out.trace_h += e.trace();
  out.trace_hth += 2.0 * (t.g_inv * mixed).trace() + e.cwiseProduct(e.transpose()).sum();
  return out;
}

double SpectralSmoother::gcv(double rho) const { return gcv_criterion(stats(rho), basis_->n()); }

bool SpectralSmoother::admissible(double rho) const {
  return stats(rho).trace_h / static_cast<double>(basis_->n()) < 1.0 - 1e-10;
}

SlopeEstimate SpectralSmoother::coefficients(double rho) const {
  const auto t = evaluate(rho);
  if (!t.ok) fail(ErrorKind::SingularSystem, "PoI block is singular at this rho");
  const double n = static_cast<double>(basis_->n());
  const double np = n * static_cast<double>(basis_->p());
  const Eigen::ArrayXd lambda = basis_->values().array();
  Eigen::VectorXd coords = basis_->response_coords();
  if (!poi_indices_.empty()) coords -= z_coords_ * t.gamma;
  // The spline part smooths Y - Z gamma: b = W diag(sqrt(lambda)/(lambda+rho)) U'(Y - Z gamma).
  const Eigen::VectorXd scaled =
      (coords.array() * lambda.sqrt() / (lambda + rho)).matrix() * (std::sqrt(np) / n);
  const Eigen::VectorXd rotated = basis_->right() * scaled;
  const auto& spectrum = basis_->spectrum();
  SlopeEstimate est;
  est.beta_grid = spectrum.vectors * (rotated.array() * spectrum.values.array().rsqrt()).matrix();
  est.beta_poi = poi_indices_.empty() ? Eigen::VectorXd() : t.gamma;
  const auto st = stats(rho);
  est.rho = rho;
  est.rss = st.rss;
  est.smoother_trace = st.trace_h;
  est.edf = st.trace_hth;
  est.gcv_value = gcv_criterion(st, basis_->n());
  return est;
}

namespace {

double gcv_or_inf(const SpectralSmoother& smoother, double rho) {
  const auto st = smoother.stats(rho);
  const double n = static_cast<double>(smoother.basis().n());
  if (!std::isfinite(st.rss) || !(st.trace_h / n < 1.0 - 1e-10)) return std::numeric_limits<double>::infinity();
  const double value = gcv_criterion(st, smoother.basis().n());
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

}  // namespace

SlopeEstimate optimize_gcv(const SpectralSmoother& smoother, const RhoGrid& grid) {
  const auto values = grid.values();
  double best_rho = 0.0;
  double best_gcv = std::numeric_limits<double>::infinity();
  std::size_t best_i = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = gcv_or_inf(smoother, values[i]);
    if (std::isfinite(g) && g <= best_gcv) {
      best_gcv = g;
      best_rho = values[i];
      best_i = i;
    }
  }
  if (best_i == values.size()) fail(ErrorKind::AllRhoInvalid, "no rho on the grid has Tr(H) < n");

  if (grid.refine && values.size() >= 2) {
    // Golden-section search in log(rho) between the grid neighbours.
    double lo = std::log(values[best_i == 0 ? 0 : best_i - 1]);
    double hi = std::log(values[std::min(best_i + 1, values.size() - 1)]);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - ratio * (hi - lo);
    double b = lo + ratio * (hi - lo);
    double fa = gcv_or_inf(smoother, std::exp(a));
    double fb = gcv_or_inf(smoother, std::exp(b));
    for (int it = 0; it < 60 && hi - lo > 1e-7; ++it) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - ratio * (hi - lo);
        fa = gcv_or_inf(smoother, std::exp(a));
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + ratio * (hi - lo);
        fb = gcv_or_inf(smoother, std::exp(b));
      }
    }
    const double cand_u = fa < fb ? a : b;
    const double cand_f = std::min(fa, fb);
    if (cand_f < best_gcv) {
      best_gcv = cand_f;
      best_rho = std::exp(cand_u);
    }
  }

  const auto& basis = smoother.basis();
  const auto& poi = smoother.poi_indices();
  const std::size_t p = basis.p();
  const auto pp = static_cast<Eigen::Index>(p);
  const auto s = static_cast<Eigen::Index>(poi.size());
  const double pd = static_cast<double>(p);

  DirectSystem sys;
  sys.n = basis.n();
  sys.p = p;
  sys.gram.resize(pp + s, pp + s);
  sys.gram.topLeftCorner(pp, pp) = basis.gram();
  sys.cross.resize(pp + s);
  sys.cross.head(pp) = basis.cross();
  for (Eigen::Index a = 0; a < s; ++a) {
    const auto ja = static_cast<Eigen::Index>(poi[static_cast<std::size_t>(a)]);
    sys.gram.col(pp + a).head(pp) = pd * basis.gram().col(ja);
    sys.gram.row(pp + a).head(pp) = pd * basis.gram().col(ja).transpose();
    for (Eigen::Index b = 0; b < s; ++b) {
      const auto jb = static_cast<Eigen::Index>(poi[static_cast<std::size_t>(b)]);
      sys.gram(pp + a, pp + b) = pd * pd * basis.gram()(ja, jb);
    }
    sys.cross(pp + a) = pd * basis.cross()(ja);
  }
  sys.penalty = Eigen::MatrixXd::Zero(pp + s, pp + s);
  sys.penalty.topLeftCorner(pp, pp) = basis.spectrum().penalty;

  SlopeEstimate est;
  try {
    est = split_coefficients(solve_direct(sys, best_rho), p, best_rho);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularSystem) throw;
    est = smoother.coefficients(best_rho);
  }
  const auto st = smoother.stats(best_rho);
  est.rho = best_rho;
  est.rss = residual_ss(basis.xc(), basis.yc(), poi, est);
  est.smoother_trace = st.trace_h;
  est.edf = st.trace_hth;
  est.gcv_value = gcv_criterion({est.rss, st.trace_h, st.trace_hth}, basis.n());
  return est;
}

SlopeEstimate optimize_gcv(const AugmentedDesign& design, const Eigen::VectorXd& yc,
                           const RhoGrid& grid) {
  const auto pp = static_cast<Eigen::Index>(design.grid_size);
  auto spectrum = decompose_penalty(design.penalty.topLeftCorner(pp, pp));
  SmootherBasis basis(design.xt.leftCols(pp), yc, std::move(spectrum));
  SpectralSmoother smoother(basis, design.poi_indices);
  return optimize_gcv(smoother, grid);
}

}  // namespace flrpoi
