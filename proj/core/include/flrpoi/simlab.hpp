#pragma once

// Monte-Carlo studies on Brownian-motion predictors: the named data
// generating processes, response simulation, PoI detection scoring, and the
// replication engine with bias/variance aggregation.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flrpoi/funspace.hpp"
#include "flrpoi/selector.hpp"

namespace flrpoi {

enum class DgpName { Easy, Complicated, OnlyPoI, NoPoI, Custom };

std::string_view to_string(DgpName d) noexcept;  // "easy", "complicated", "onlypoi", "nopoi", "custom"
// Case-insensitive. Throws ConfigError naming the valid options.
DgpName parse_dgp_name(std::string_view name);

struct DgpSpec {
  DgpName name = DgpName::Easy;
  std::function<double(double)> beta;
  std::vector<double> taus;
  std::vector<double> betas;
  double sigma_eps = 0.125;
  std::size_t n = 250;
  std::size_t p = 300;
  bool standardize_preselect = true;
  bool strict_taus = false;  // reject taus that are not grid points instead of snapping

  // Easy: beta(t) = -(t-1)^2 + 2, tau = {0.3, 0.6}, beta_s = {-3, 3}.
  static DgpSpec easy();
  // Complicated: beta(t) = -5(t-0.5)^3 - t + 1, tau = {0.3, 0.4, 0.6}, beta_s = {-3, 3, 3}.
  static DgpSpec complicated();
  // OnlyPoI: beta = 0 with Easy's points of impact.
  static DgpSpec only_poi();
  // NoPoI: Easy's beta without points of impact.
  static DgpSpec no_poi();
  static DgpSpec named(DgpName name);

  // Throws InvalidArgument on inconsistent fields.
  void validate() const;
};

// Counter-based seed derivation (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t x) noexcept;
// Seed of replication r under the master seed.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) noexcept;

// Standard Brownian motion on t_j = j/(p-1): X(0) = 0 and independent
// N(0, 1/(p-1)) increments.
Eigen::MatrixXd gen_brownian(std::size_t n, std::size_t p, std::uint64_t seed);

// Grid indices of the taus (nearest grid point). Throws TauOffGrid in strict
// mode when a tau is more than 1e-9 away from a grid point.
std::vector<std::size_t> snap_taus(const std::vector<double>& taus, const Grid& grid, bool strict);

// Y_i = p^-1 sum_j beta(t_j) X_ij + sum_s beta_s X_i(tau_s) + eps_i.
Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, const DgpSpec& spec, std::uint64_t seed);

struct DetectionResult {
  std::vector<bool> found;                       // per true tau
  std::vector<std::optional<std::size_t>> match;  // index into the estimates
  bool all = false;
};

// Each true tau, in order, takes the nearest unmatched estimate with
// |tau_hat - tau| < tolerance.
DetectionResult detection_check(const std::vector<double>& estimates, const std::vector<double>& truth,
                                double tolerance = 0.01);

struct PoiSummary {
  double tau = 0.0;
  double beta = 0.0;
  std::size_t found = 0;
  std::optional<double> mean_coefficient;
  std::optional<double> bias2;
  std::optional<double> variance;
};

struct EstimatorSummary {
  Variant estimator = Variant::PesEs;
  std::size_t replications = 0;  // successful
  std::size_t failures = 0;
  double bias2_beta = 0.0;       // p^-1 sum_j (mean beta_hat - beta)^2
  double var_beta = 0.0;         // p^-1 sum_j R^-1 sum_r (beta_hat_r - mean)^2
  std::optional<double> bias2_pois;  // average over taus found at least once
  std::optional<double> var_pois;
  std::optional<double> detect_pct;  // absent without true PoIs
  double mean_selected = 0.0;        // average number of PoIs returned
  std::vector<PoiSummary> pois;
  std::vector<std::string> failure_messages;  // distinct messages, first occurrence order
};

struct StudyReport {
  DgpName dgp = DgpName::Easy;
  std::size_t n = 0;
  std::size_t p = 0;
  double sigma_eps = 0.0;
  std::vector<double> taus;
  std::vector<double> betas;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;
};

struct StudyOptions {
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: all available cores
  SelectorConfig selector;
  // Per-replication beta-hat curves, kept only when requested.
  std::vector<std::vector<Eigen::VectorXd>>* curves = nullptr;
};

// Replications run in parallel; results are stored by replication index and
// reduced in order, so the report does not depend on the thread count.
StudyReport run_study(const DgpSpec& spec, const std::vector<Variant>& estimators,
                      const StudyOptions& options);

}  // namespace flrpoi
