#pragma once

// Machine-readable output: fit results and study reports as JSON (with
// matching parsers) and the study summary as a CSV table. Non-finite numbers
// are written as null.

#include <string>
#include <string_view>

#include "flrpoi/funspace.hpp"
#include "flrpoi/poisearch.hpp"
#include "flrpoi/selector.hpp"
#include "flrpoi/simlab.hpp"

namespace flrpoi {

// Keys: estimator, beta_grid, grid, pois [{index, location, coefficient,
// std_err}], rho, delta, k_delta, edf, bic, rss, gcv, trace_h, components,
// preselected, delta_trace.
std::string fit_to_json(const FitResult& fit, const Grid& grid);
// Throws ParseError on malformed input.
FitResult fit_from_json(std::string_view json);

// Long format: kind,index,location,value with kind "beta" per grid point and
// "poi" per point of impact.
std::string fit_to_csv(const FitResult& fit, const Grid& grid);

std::string study_to_json(const StudyReport& report);
StudyReport study_from_json(std::string_view json);

// Header: estimator,dgp,n,p,detect_pct,bias2_beta,var_beta,bias2_pois,var_pois.
// Absent values are empty fields.
std::string study_to_csv(const StudyReport& report);

// Keys: delta, k_delta, kappa, mean_square_delta, mean_square_half_delta,
// verdict ("identifiable" when kappa < 2, otherwise null).
std::string kappa_to_json(const KappaEstimate& k, const DeltaSpec& spec);

}  // namespace flrpoi
