#pragma once

// Pre-selection of potential points of impact from second-order difference
// quotients Z(t; delta) = X(t) - (X(t - delta) + X(t + delta)) / 2, and the
// kappa-hat diagnostic for local variability of the predictor process.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace flrpoi {

// delta quantized to the grid: delta = k / (p - 1) with 1 <= k < (p - 1) / 2.
class DeltaSpec {
 public:
  // k = round(delta * (p - 1)), half away from zero. Throws DeltaOutOfRange.
  DeltaSpec(double delta, std::size_t p);

  double delta() const noexcept { return delta_; }
  double requested_delta() const noexcept { return requested_; }
  std::size_t offset() const noexcept { return k_; }
  std::size_t grid_size() const noexcept { return p_; }

  // Interior index window J_0 = [k, p - 1 - k] (zero-based).
  std::size_t first_interior() const noexcept { return k_; }
  std::size_t last_interior() const noexcept { return p_ - 1 - k_; }
  bool is_interior(std::size_t j) const noexcept { return j >= k_ && j + k_ < p_; }

  // Candidates closer than this to a selected point are eliminated.
  double elimination_radius() const;

 private:
  double requested_ = 0.0;
  double delta_ = 0.0;
  std::size_t k_ = 0;
  std::size_t p_ = 0;
};

struct PoICandidate {
  std::size_t index = 0;   // zero-based grid index
  double location = 0.0;   // t at index
  double score = 0.0;      // |n^-1 sum_i Z_i(t) Y_i| when selected
};

struct PoICandidateList {
  DeltaSpec delta_spec;
  std::vector<PoICandidate> candidates;  // in selection order

  std::vector<std::size_t> indices() const;
};

// Z for one trajectory at grid index j. Throws IndexOutOfInterior.
double second_diff(const Eigen::Ref<const Eigen::RowVectorXd>& row, const DeltaSpec& spec,
                   std::size_t j);

// |n^-1 sum_i Z_i(t_j) Y_i| for every interior j; zero outside J_0.
Eigen::VectorXd cross_moment_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const DeltaSpec& spec);

// Greedy argmax search with sqrt(delta)/2 elimination. Ties go to the
// smallest index. Intended for standardized X and Y.
PoICandidateList search_potential_pois(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const DeltaSpec& spec);

struct KappaEstimate {
  double kappa = 0.0;
  double mean_square_delta = 0.0;       // (p - 2k)^-1 sum_J sum_i Z_delta^2
  double mean_square_half_delta = 0.0;  // same window, offset k/2
};

// Requires an even offset k so that delta/2 falls on the grid
// (DeltaNotHalvable otherwise). Throws ZeroDenominator if the delta/2 sum
// vanishes.
KappaEstimate estimate_kappa(const Eigen::MatrixXd& x, const DeltaSpec& spec);

}  // namespace flrpoi
