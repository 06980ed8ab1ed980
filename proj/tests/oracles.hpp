#pragma once

// Independent reference implementations used by the tests. They favour
// directness over speed: explicit matrices, textbook formulas, plain loops.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

// X_T = [Xc | p Xc(t_s)], A_T = blockdiag(A, 0).
inline Eigen::MatrixXd augmented_design(const Eigen::MatrixXd& xc, const std::vector<std::size_t>& pois) {
  const auto n = xc.rows();
  const auto p = xc.cols();
  Eigen::MatrixXd xt(n, p + static_cast<Eigen::Index>(pois.size()));
  xt.leftCols(p) = xc;
  for (std::size_t s = 0; s < pois.size(); ++s) {
    xt.col(p + static_cast<Eigen::Index>(s)) = static_cast<double>(p) * xc.col(static_cast<Eigen::Index>(pois[s]));
  }
  return xt;
}

inline Eigen::MatrixXd augmented_penalty(const Eigen::MatrixXd& a, std::size_t s) {
  const auto p = a.rows();
  Eigen::MatrixXd at = Eigen::MatrixXd::Zero(p + static_cast<Eigen::Index>(s), p + static_cast<Eigen::Index>(s));
  at.topLeftCorner(p, p) = a;
  return at;
}

struct DenseFit {
  Eigen::VectorXd theta;
  Eigen::MatrixXd hat;
  double rss = 0.0;
  double trace_h = 0.0;
  double trace_hth = 0.0;
};

// Solves the normal equations by full-pivot LU and materializes H.
inline DenseFit dense_fit(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc, const Eigen::MatrixXd& a,
                          const std::vector<std::size_t>& pois, double rho) {
  const double n = static_cast<double>(xc.rows());
  const double p = static_cast<double>(xc.cols());
  const Eigen::MatrixXd xt = augmented_design(xc, pois);
  const Eigen::MatrixXd c = xt.transpose() * xt / (n * p) + rho * augmented_penalty(a, pois.size());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
  DenseFit out;
  out.theta = lu.solve(xt.transpose() * yc / n);
  out.hat = xt * lu.solve(xt.transpose()) / (n * p);
  out.rss = (yc - out.hat * yc).squaredNorm();
  out.trace_h = out.hat.trace();
  out.trace_hth = (out.hat.transpose() * out.hat).trace();
  return out;
}

// OLS without intercept through Householder QR; returns RSS.
inline double ols_rss(const Eigen::MatrixXd& z, const Eigen::VectorXd& v) {
  if (z.cols() == 0) return v.squaredNorm();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  const Eigen::VectorXd coef = qr.solve(v);
  return (v - z * coef).squaredNorm();
}

inline double bic(const Eigen::MatrixXd& xst, const std::vector<std::size_t>& cols, const Eigen::VectorXd& v) {
  Eigen::MatrixXd z(xst.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t s = 0; s < cols.size(); ++s) z.col(static_cast<Eigen::Index>(s)) = xst.col(static_cast<Eigen::Index>(cols[s]));
  const double n = static_cast<double>(v.size());
  return n * std::log(ols_rss(z, v) / n) + std::log(n) * static_cast<double>(cols.size());
}

struct PrefixChoice {
  std::vector<std::size_t> selected;
  std::vector<double> bic;
};

// Evaluates every prefix (empty first) and keeps the first minimum.
inline PrefixChoice prefix_search(const Eigen::MatrixXd& xst, const std::vector<std::size_t>& candidates,
                                  const Eigen::VectorXd& v) {
  PrefixChoice out;
  std::size_t best = 0;
  for (std::size_t m = 0; m <= candidates.size(); ++m) {
    const std::vector<std::size_t> prefix(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m));
    out.bic.push_back(bic(xst, prefix, v));
    if (out.bic[m] < out.bic[best]) best = m;
  }
  out.selected.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(best));
  return out;
}

// Greedy search over Z scores computed row by row.
inline std::vector<std::size_t> greedy_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t k) {
  const auto n = x.rows();
  const auto p = static_cast<std::size_t>(x.cols());
  const double step = 1.0 / static_cast<double>(p - 1);
  const double radius = std::sqrt(static_cast<double>(k) * step) / 2.0;
  std::vector<double> score(p, 0.0);
  std::vector<bool> open(p, false);
  for (std::size_t j = k; j + k < p; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto kk = static_cast<Eigen::Index>(k);
      acc += (x(i, jj) - 0.5 * (x(i, jj - kk) + x(i, jj + kk))) * y(i);
    }
    score[j] = std::abs(acc / static_cast<double>(n));
    open[j] = true;
  }
  std::vector<std::size_t> out;
  for (;;) {
    std::size_t best = p;
    for (std::size_t j = 0; j < p; ++j) {
      if (open[j] && (best == p || score[j] > score[best])) best = j;
    }
    if (best == p) break;
    out.push_back(best);
    for (std::size_t j = 0; j < p; ++j) {
      const double d = std::abs(static_cast<double>(j) - static_cast<double>(best)) * step;
      if (d < radius) open[j] = false;
    }
  }
  return out;
}

// Brownian paths from an explicit cumulative sum.
inline Eigen::MatrixXd brownian(std::size_t n, std::size_t p, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> step(0.0, std::sqrt(1.0 / static_cast<double>(p - 1)));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 1; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) + step(gen);
    }
  }
  return x;
}

inline Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x) { return x.rowwise() - x.colwise().mean(); }

// Integrated squared second derivative of the natural cubic spline through
// (t_j, v_j), from the tridiagonal moment system solved densely.
inline double spline_roughness(const std::vector<double>& t, const Eigen::VectorXd& v) {
  const auto p = static_cast<Eigen::Index>(t.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
  if (p > 2) {
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(p - 2, p - 2);
    Eigen::VectorXd rhs(p - 2);
    for (Eigen::Index i = 1; i < p - 1; ++i) {
      const double h0 = t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i - 1)];
      const double h1 = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
      sys(i - 1, i - 1) = (h0 + h1) / 3.0;
      if (i > 1) sys(i - 1, i - 2) = h0 / 6.0;
      if (i < p - 2) sys(i - 1, i) = h1 / 6.0;
      rhs(i - 1) = (v(i + 1) - v(i)) / h1 - (v(i) - v(i - 1)) / h0;
    }
    m.segment(1, p - 2) = sys.fullPivLu().solve(rhs);
  }
  // s'' is linear on each interval: integral of (a + (b - a) u)^2 h du.
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    const double h = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
    total += h * (m(i) * m(i) + m(i) * m(i + 1) + m(i + 1) * m(i + 1)) / 3.0;
  }
  return total;
}

}  // namespace oracle
