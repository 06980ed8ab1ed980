#pragma once

// PoI sub-selection by BIC along the candidate prefix chain, delta selection
// by BIC, and the PES / PES-ES / PES-2ES pipelines. CKS is the PoI-free
// smoothing-spline fit; KPS is dispatched to the FPCA benchmark.

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flrpoi/funspace.hpp"
#include "flrpoi/pensolve.hpp"
#include "flrpoi/poisearch.hpp"
#include "flrpoi/splinepen.hpp"

namespace flrpoi {

enum class Variant { Pes, PesEs, Pes2Es, Cks, Kps };

// "pes", "pes-es", "pes-2es", "cks", "kps".
std::string_view to_string(Variant v) noexcept;
// Throws InvalidArgument listing the valid names.
Variant parse_variant(std::string_view name);

struct SelectorConfig {
  std::vector<double> delta_grid;  // empty: default_delta_grid(p)
  RhoGrid rho_grid;
  Variant variant = Variant::PesEs;
  std::optional<double> sd_floor;  // empty: default_sd_floor of the centered data
  bool standardize_preselect = true;
  std::optional<std::size_t> max_candidates;
  bool standard_errors = false;
  std::size_t kps_max_components = 150;
};

// count log-spaced values in [lo, hi], quantized to the grid, duplicates and
// inadmissible values removed. Ascending. Throws DeltaOutOfRange if nothing
// admissible remains.
std::vector<double> log_delta_grid(std::size_t p, std::size_t count, double lo, double hi);

// log_delta_grid(p, 10, 2/(p-1), 0.1).
std::vector<double> default_delta_grid(std::size_t p);

// Grid and spline penalty shared by every fit on the same grid size. Cached
// per p; safe to call from several threads.
struct PenaltyCache {
  Grid grid;
  PenaltyBundle bundle;
  std::shared_ptr<const PenaltySpectrum> spectrum;
};
std::shared_ptr<const PenaltyCache> penalty_cache(std::size_t p);

// Centered and standardized views of one dataset.
struct PreparedData {
  CenteredDataset centered;
  StandardizedDataset standardized;
  double sd_floor = 0.0;

  std::size_t n() const noexcept { return centered.n(); }
  std::size_t p() const noexcept { return centered.p(); }
};
PreparedData prepare(const FunctionalDataset& ds, const SelectorConfig& cfg);

// Candidate search on the standardized (or, if disabled, centered) data,
// truncated to cfg.max_candidates.
PoICandidateList preselect(const PreparedData& data, const DeltaSpec& spec,
                           const SelectorConfig& cfg);

// The candidates whose columns of x are not (numerically) in the span of the
// earlier kept ones, in their original order.
std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x,
                                             const std::vector<std::size_t>& indices);

// v = Yc - p^-1 Xc beta, scaled by its own sd. Throws DegenerateResponse if
// that sd is below sd_floor.
Eigen::VectorXd neutralize_response(const Eigen::VectorXd& yc, const Eigen::MatrixXd& xc,
                                    const Eigen::VectorXd& beta_grid, double sd_floor);

// n log(RSS/n) + log(n) |R| for the intercept-free OLS of v on the columns R
// of xst. Throws CollinearPoIColumns if those columns are rank deficient.
double bic_subset(const std::vector<std::size_t>& columns, const Eigen::VectorXd& v,
                  const Eigen::MatrixXd& xst);

struct Subselection {
  std::vector<std::size_t> selected;  // chosen prefix of the usable candidates
  std::vector<std::size_t> usable;    // candidates after collinearity drops, in order
  std::vector<std::size_t> dropped;   // candidates dropped as collinear
  std::vector<double> bic;            // bic[m] for the first m usable candidates
};

// Directed search over the prefixes empty, {c1}, {c1, c2}, ... A candidate
// whose column is collinear with the earlier kept ones is dropped. Ties go
// to the smaller set.
Subselection subselect(const std::vector<std::size_t>& candidates, const Eigen::VectorXd& v,
                       const Eigen::MatrixXd& xst);

// n log(RSS/n) + log(n) edf.
double bic_delta(double rss, double edf, std::size_t n);

struct SelectedPoI {
  std::size_t index = 0;
  double location = 0.0;
  double coefficient = 0.0;
  std::optional<double> std_error;
};

struct DeltaTrace {
  double delta = 0.0;
  std::size_t k_delta = 0;
  bool ok = false;
  double bic = 0.0;
  std::size_t candidates = 0;
  std::size_t selected = 0;
  std::string failure;
};

struct FitResult {
  Variant variant = Variant::PesEs;
  SlopeEstimate estimate;
  std::vector<SelectedPoI> pois;
  std::optional<double> delta;  // absent for CKS
  std::size_t k_delta = 0;
  double bic = 0.0;
  std::optional<Eigen::VectorXd> standard_errors;  // p grid values, then one per PoI
  std::optional<std::size_t> components;           // KPS only
  std::vector<std::size_t> preselected;            // candidates at the chosen delta
  std::vector<std::size_t> first_selection;        // selection after the first sub-select
  std::vector<DeltaTrace> trace;

  std::vector<std::size_t> poi_indices() const;
};

// Runs cfg.variant on the dataset. Deltas whose pipeline fails are skipped
// and recorded in the trace; throws AllDeltaFailed if none survive.
FitResult run_variant(const FunctionalDataset& ds, const SelectorConfig& cfg);

}  // namespace flrpoi
