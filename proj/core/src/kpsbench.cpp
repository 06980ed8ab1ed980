#include "flrpoi/kpsbench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flrpoi/error.hpp"
#include "flrpoi/linalg.hpp"

namespace flrpoi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCollinearTol = 1e-10;

struct KpsChoice {
  double bic = std::numeric_limits<double>::infinity();
  std::size_t delta_pos = 0;
  std::size_t components = 0;
  std::vector<std::size_t> pois;
};

}  // namespace

FpcaDecomposition fpca(const Eigen::MatrixXd& xc, std::size_t max_components) {
  const auto n = static_cast<std::size_t>(xc.rows());
  const auto p = static_cast<std::size_t>(xc.cols());
  if (max_components > std::min(n, p)) {
    fail(ErrorKind::InvalidArgument, "max_components exceeds min(n, p)");
  }
  const double np = static_cast<double>(n) * static_cast<double>(p);
  const double sqrt_p = std::sqrt(static_cast<double>(p));

  // Work in the smaller of the two Gram matrices; both share the nonzero spectrum.
  const bool wide = n <= p;
  Eigen::MatrixXd gram;
  if (wide) {
    gram.noalias() = xc * xc.transpose();
  } else {
    gram.noalias() = xc.transpose() * xc;
  }
  gram /= np;
  const auto eig = linalg::symmetric_eigen(linalg::symmetrized(gram));
  const Eigen::Index total = eig.values.size();
  const double top = total > 0 ? std::max(eig.values(total - 1), 0.0) : 0.0;

  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(max_components) && keep < total &&
         eig.values(total - 1 - keep) > 1e-12 * top) {
    ++keep;
  }

  FpcaDecomposition out;
  out.eigenvalues.resize(keep);
  out.eigenfunctions.resize(static_cast<Eigen::Index>(p), keep);
  for (Eigen::Index k = 0; k < keep; ++k) {
    const double mu = eig.values(total - 1 - k);
    out.eigenvalues(k) = mu;
    Eigen::VectorXd u;
    if (wide) {
      u = xc.transpose() * eig.vectors.col(total - 1 - k) / std::sqrt(np * mu);
    } else {
      u = eig.vectors.col(total - 1 - k);
    }
    // Fix the sign so the largest-magnitude entry is positive.
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    out.eigenfunctions.col(k) = sqrt_p * u;
  }
  out.scores = xc * out.eigenfunctions / static_cast<double>(p);
  return out;
}

std::size_t fpca_rank(const FpcaDecomposition& f) {
  if (f.eigenvalues.size() == 0) return 0;
  const double top = f.eigenvalues(0);
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(f.eigenvalues.size()) &&
         f.eigenvalues(static_cast<Eigen::Index>(r)) > 1e-10 * top) {
    ++r;
  }
  return r;
}

FitResult kps_fit(const FunctionalDataset& ds, const SelectorConfig& cfg) {
  const std::size_t n = ds.n();
  const std::size_t p = ds.p();
  const auto data = prepare(ds, cfg);
  const auto& xc = data.centered.xc;
  const auto& yc = data.centered.yc;
  const double nn = static_cast<double>(n);
  const double log_n = std::log(nn);

  if (cfg.kps_max_components < 1) fail(ErrorKind::InvalidArgument, "KPS needs at least one component");
  const auto f = fpca(xc, std::min({cfg.kps_max_components, n, p}));
  const std::size_t k_max = std::min({cfg.kps_max_components, fpca_rank(f), n - 2});
  if (k_max < 1) fail(ErrorKind::SingularSystem, "predictor has no usable principal components");
  const auto kk = static_cast<Eigen::Index>(k_max);
  const Eigen::MatrixXd scores = f.scores.leftCols(kk);
  const Eigen::VectorXd score_norm2 = scores.colwise().squaredNorm().transpose();
  const Eigen::VectorXd score_y = scores.transpose() * yc;
  const double yy = yc.squaredNorm();
  const double rss_floor = 1e-14 * std::max(yy, std::numeric_limits<double>::min());

  const auto deltas = cfg.delta_grid.empty() ? default_delta_grid(p) : cfg.delta_grid;
  std::vector<DeltaSpec> specs;
  for (double d : deltas) specs.emplace_back(d, p);

  KpsChoice best;
  std::vector<DeltaTrace> trace;
  std::vector<std::vector<std::size_t>> candidate_sets;
  for (std::size_t pos = 0; pos < specs.size(); ++pos) {
    const auto& spec = specs[pos];
    DeltaTrace row;
    row.delta = spec.delta();
    row.k_delta = spec.offset();
    row.bic = std::numeric_limits<double>::infinity();
    const auto cands = independent_columns(xc, preselect(data, spec, cfg).indices());
    candidate_sets.push_back(cands);
    row.candidates = cands.size();
    const auto s = static_cast<Eigen::Index>(cands.size());

    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), s);
    for (Eigen::Index c = 0; c < s; ++c) z.col(c) = xc.col(static_cast<Eigen::Index>(cands[static_cast<std::size_t>(c)]));
    const Eigen::MatrixXd score_z = scores.transpose() * z;  // K x S
    // Gram quantities after projecting out the first K scores (orthogonal
    // columns, so each K is a rank-one downdate).
    Eigen::MatrixXd g = z.transpose() * z;
    const Eigen::VectorXd g_diag0 = g.diagonal();
    Eigen::VectorXd b = z.transpose() * yc;
    double ry = yy;

    std::size_t best_m_here = 0;
    for (Eigen::Index k = 0; k < kk; ++k) {
      const double w = score_norm2(k);
      const Eigen::RowVectorXd c = score_z.row(k);
      g.noalias() -= c.transpose() * c / w;
      b -= c.transpose() * (score_y(k) / w);
      ry -= score_y(k) * score_y(k) / w;
      const std::size_t comps = static_cast<std::size_t>(k) + 1;

      // Prefix OLS through an incremental Cholesky of g; dependent columns are dropped.
      Eigen::MatrixXd l = Eigen::MatrixXd::Zero(s, s);
      Eigen::VectorXd coef(s);
      std::vector<Eigen::Index> kept;
      double explained = 0.0;
      auto consider = [&](std::size_t m) {
        if (comps + m > n - 1) return;
        const double rss = std::max(ry - explained, rss_floor);
        const double bic = nn * std::log(rss / nn) + log_n * static_cast<double>(comps + m);
        if (bic < row.bic) {
          row.bic = bic;
          best_m_here = m;
        }
        if (bic < best.bic) {
          best.bic = bic;
          best.delta_pos = pos;
          best.components = comps;
          best.pois.clear();
          for (std::size_t i = 0; i < m; ++i) best.pois.push_back(cands[static_cast<std::size_t>(kept[i])]);
        }
      };
      consider(0);
      for (Eigen::Index j = 0; j < s; ++j) {
        const auto m = static_cast<Eigen::Index>(kept.size());
        Eigen::VectorXd cross(m);
        for (Eigen::Index i = 0; i < m; ++i) cross(i) = g(kept[static_cast<std::size_t>(i)], j);
        Eigen::VectorXd lrow = cross;
        if (m > 0) l.topLeftCorner(m, m).triangularView<Eigen::Lower>().solveInPlace(lrow);
        const double pivot = g(j, j) - lrow.squaredNorm();
        if (!(pivot > kCollinearTol * g_diag0(j))) continue;
        const double diag = std::sqrt(pivot);
        l.row(m).head(m) = lrow.transpose();
        l(m, m) = diag;
        const double wj = (b(j) - lrow.dot(coef.head(m))) / diag;
        coef(m) = wj;
        explained += wj * wj;
        kept.push_back(j);
        consider(kept.size());
      }
    }
    row.ok = std::isfinite(row.bic);
    row.selected = best_m_here;
    if (!row.ok) row.failure = "no admissible (K, R) pair";
    trace.push_back(std::move(row));
  }
  if (!std::isfinite(best.bic)) fail(ErrorKind::AllDeltaFailed, "KPS found no admissible model");

  // Refit the winning triple by OLS on [scores_K | Xc(tau)].
  const auto comps = static_cast<Eigen::Index>(best.components);
  const auto m = static_cast<Eigen::Index>(best.pois.size());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), comps + m);
  design.leftCols(comps) = scores.leftCols(comps);
  for (Eigen::Index s = 0; s < m; ++s) {
    design.col(comps + s) = xc.col(static_cast<Eigen::Index>(best.pois[static_cast<std::size_t>(s)]));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::VectorXd theta = qr.solve(yc);

  FitResult out;
  out.variant = Variant::Kps;
  out.estimate.beta_grid = f.eigenfunctions.leftCols(comps) * theta.head(comps);
  out.estimate.beta_poi = theta.tail(m);
  out.estimate.rho = kNaN;
  out.estimate.gcv_value = kNaN;
  out.estimate.smoother_trace = kNaN;
  out.estimate.edf = static_cast<double>(comps + m);
  out.estimate.rss = (yc - design * theta).squaredNorm();
  out.delta = specs[best.delta_pos].delta();
  out.k_delta = specs[best.delta_pos].offset();
  out.bic = best.bic;
  out.components = best.components;
  out.preselected = candidate_sets[best.delta_pos];
  const Grid& grid = ds.grid();
  for (Eigen::Index s = 0; s < m; ++s) {
    SelectedPoI poi;
    poi.index = best.pois[static_cast<std::size_t>(s)];
    poi.location = grid[poi.index];
    poi.coefficient = theta(comps + s);
    out.pois.push_back(poi);
  }
  out.first_selection = out.poi_indices();
  out.trace = std::move(trace);
  return out;
}

}  // namespace flrpoi
