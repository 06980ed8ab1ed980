#include "flrpoi/poisearch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flrpoi/error.hpp"

namespace flrpoi {

DeltaSpec::DeltaSpec(double delta, std::size_t p) : requested_(delta), p_(p) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    fail(ErrorKind::DeltaOutOfRange, "delta must be positive, got " + std::to_string(delta));
  }
  if (p < 5) fail(ErrorKind::InvalidArgument, "grid too small for second differences");
  const double k = std::round(delta * static_cast<double>(p - 1));
  // 1 <= k < (p - 1) / 2  <=>  2k < p - 1
  if (k < 1.0 || 2.0 * k >= static_cast<double>(p - 1)) {
    fail(ErrorKind::DeltaOutOfRange, "delta=" + std::to_string(delta) + " maps to offset " +
                                         std::to_string(static_cast<long long>(k)) +
                                         ", outside [1, (p-1)/2) for p=" + std::to_string(p));
  }
  k_ = static_cast<std::size_t>(k);
  delta_ = static_cast<double>(k_) / static_cast<double>(p - 1);
}

double DeltaSpec::elimination_radius() const { return std::sqrt(delta_) / 2.0; }

std::vector<std::size_t> PoICandidateList::indices() const {
  std::vector<std::size_t> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.index);
  return out;
}

double second_diff(const Eigen::Ref<const Eigen::RowVectorXd>& row, const DeltaSpec& spec,
                   std::size_t j) {
  if (static_cast<std::size_t>(row.size()) != spec.grid_size()) {
    fail(ErrorKind::ShapeMismatch, "trajectory length differs from grid size");
  }
  if (!spec.is_interior(j)) {
    fail(ErrorKind::IndexOutOfInterior, "index " + std::to_string(j) + " lies outside [" +
                                            std::to_string(spec.first_interior()) + ", " +
                                            std::to_string(spec.last_interior()) + "]");
  }
  const auto k = spec.offset();
  const auto jj = static_cast<Eigen::Index>(j);
  const auto kk = static_cast<Eigen::Index>(k);
  return row(jj) - 0.5 * (row(jj - kk) + row(jj + kk));
}

Eigen::VectorXd cross_moment_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const DeltaSpec& spec) {
  if (x.rows() != y.size()) fail(ErrorKind::ShapeMismatch, "X rows differ from Y length");
  if (static_cast<std::size_t>(x.cols()) != spec.grid_size()) {
    fail(ErrorKind::ShapeMismatch, "X columns differ from grid size");
  }
  // Z is linear in X, so n^-1 sum_i Z_i(t_j) Y_i is the second difference of
  // the pointwise cross-moment n^-1 X'Y.
  const Eigen::VectorXd moment = x.transpose() * y / static_cast<double>(y.size());
  const auto k = static_cast<Eigen::Index>(spec.offset());
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(x.cols());
  for (auto j = static_cast<Eigen::Index>(spec.first_interior());
       j <= static_cast<Eigen::Index>(spec.last_interior()); ++j) {
    scores(j) = std::abs(moment(j) - 0.5 * (moment(j - k) + moment(j + k)));
  }
  return scores;
}

PoICandidateList search_potential_pois(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const DeltaSpec& spec) {
  const Eigen::VectorXd scores = cross_moment_scores(x, y, spec);
  const std::size_t p = spec.grid_size();
  const double step = 1.0 / static_cast<double>(p - 1);
  const double radius = spec.elimination_radius();

  std::vector<char> active(p, 0);
  std::size_t remaining = 0;
  for (std::size_t j = spec.first_interior(); j <= spec.last_interior(); ++j) {
    active[j] = 1;
    ++remaining;
  }

  PoICandidateList out{spec, {}};
  while (remaining > 0) {
    std::size_t best = p;
    for (std::size_t j = 0; j < p; ++j) {
      if (active[j] && (best == p || scores(static_cast<Eigen::Index>(j)) >
                                         scores(static_cast<Eigen::Index>(best)))) {
        best = j;
      }
    }
    out.candidates.push_back({best, static_cast<double>(best) * step,
                              scores(static_cast<Eigen::Index>(best))});
    for (std::size_t j = 0; j < p; ++j) {
      if (!active[j]) continue;
      const double distance =
          static_cast<double>(j > best ? j - best : best - j) * step;
      if (!(distance >= radius)) {
        active[j] = 0;
        --remaining;
      }
    }
  }
  return out;
}

KappaEstimate estimate_kappa(const Eigen::MatrixXd& x, const DeltaSpec& spec) {
  if (static_cast<std::size_t>(x.cols()) != spec.grid_size()) {
    fail(ErrorKind::ShapeMismatch, "X columns differ from grid size");
  }
  const auto k = spec.offset();
  if (k < 2 || k % 2 != 0) {
    fail(ErrorKind::DeltaNotHalvable,
         "offset k=" + std::to_string(k) + " is not even, so delta/2 is not on the grid");
  }
  const auto full = static_cast<Eigen::Index>(k);
  const auto half = static_cast<Eigen::Index>(k / 2);
  const auto first = static_cast<Eigen::Index>(spec.first_interior());
  const auto last = static_cast<Eigen::Index>(spec.last_interior());
  const auto width = last - first + 1;

  const auto center = x.middleCols(first, width);
  const Eigen::MatrixXd z_full =
      center - 0.5 * (x.middleCols(first - full, width) + x.middleCols(first + full, width));
  const Eigen::MatrixXd z_half =
      center - 0.5 * (x.middleCols(first - half, width) + x.middleCols(first + half, width));

  const double norm = static_cast<double>(width);  // p - 2k
  KappaEstimate est;
  est.mean_square_delta = z_full.squaredNorm() / norm;
  est.mean_square_half_delta = z_half.squaredNorm() / norm;
  // Rounding leaves ~1e-16 relative residue on exactly affine rows.
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  const double zero_level = (1e-12 * scale) * (1e-12 * scale);
  if (!(est.mean_square_half_delta > zero_level)) {
    fail(ErrorKind::ZeroDenominator, "second differences at delta/2 vanish");
  }
  est.kappa = std::log2(est.mean_square_delta / est.mean_square_half_delta);
  return est;
}

}  // namespace flrpoi
