#include "flrpoi/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "flrpoi/error.hpp"
#include "flrpoi/parallel.hpp"

namespace flrpoi {

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::string failure;
  Eigen::VectorXd beta_grid;
  std::vector<double> locations;
  std::vector<double> coefficients;
};

// Welford accumulator over vectors.
struct VectorMoments {
  std::size_t count = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  void add(const Eigen::VectorXd& x) {
    if (count == 0) {
      mean = Eigen::VectorXd::Zero(x.size());
      m2 = Eigen::VectorXd::Zero(x.size());
    }
    ++count;
    const Eigen::VectorXd d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d.cwiseProduct(x - mean);
  }
};

struct ScalarMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
};

}  // namespace

std::string_view to_string(DgpName d) noexcept {
  switch (d) {
    case DgpName::Easy:
      return "easy";
    case DgpName::Complicated:
      return "complicated";
    case DgpName::OnlyPoI:
      return "onlypoi";
    case DgpName::NoPoI:
      return "nopoi";
    case DgpName::Custom:
      return "custom";
  }
  return "unknown";
}

DgpName parse_dgp_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto d : {DgpName::Easy, DgpName::Complicated, DgpName::OnlyPoI, DgpName::NoPoI, DgpName::Custom}) {
    if (to_string(d) == lower) return d;
  }
  fail(ErrorKind::ConfigError, "unknown dgp '" + std::string(name) +
                                   "' (valid: easy, complicated, onlypoi, nopoi, custom)");
}

DgpSpec DgpSpec::easy() {
  DgpSpec s;
  s.name = DgpName::Easy;
  s.beta = [](double t) { return -(t - 1.0) * (t - 1.0) + 2.0; };
  s.taus = {0.3, 0.6};
  s.betas = {-3.0, 3.0};
  return s;
}

DgpSpec DgpSpec::complicated() {
  DgpSpec s;
  s.name = DgpName::Complicated;
  s.beta = [](double t) { return -5.0 * std::pow(t - 0.5, 3) - t + 1.0; };
  s.taus = {0.3, 0.4, 0.6};
  s.betas = {-3.0, 3.0, 3.0};
  return s;
}

DgpSpec DgpSpec::only_poi() {
  DgpSpec s = easy();
  s.name = DgpName::OnlyPoI;
  s.beta = [](double) { return 0.0; };
  return s;
}

DgpSpec DgpSpec::no_poi() {
  DgpSpec s = easy();
  s.name = DgpName::NoPoI;
  s.taus.clear();
  s.betas.clear();
  return s;
}

DgpSpec DgpSpec::named(DgpName name) {
  switch (name) {
    case DgpName::Easy:
      return easy();
    case DgpName::Complicated:
      return complicated();
    case DgpName::OnlyPoI:
      return only_poi();
    case DgpName::NoPoI:
      return no_poi();
    case DgpName::Custom:
      break;
  }
  fail(ErrorKind::ConfigError, "a custom dgp needs an explicit slope and PoI list");
}

void DgpSpec::validate() const {
  if (!beta) fail(ErrorKind::InvalidArgument, "dgp has no slope function");
  if (taus.size() != betas.size()) fail(ErrorKind::InvalidArgument, "taus and betas differ in length");
  std::set<double> seen;
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) fail(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    if (!seen.insert(t).second) fail(ErrorKind::InvalidArgument, "taus must be distinct");
  }
  if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) {
    fail(ErrorKind::InvalidArgument, "sigma_eps must be finite and >= 0");
  }
  if (n < 2) fail(ErrorKind::InvalidArgument, "n must be at least 2");
  if (p < 5) fail(ErrorKind::InvalidArgument, "p must be at least 5");
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) noexcept {
  return mix_seed(master ^ r);
}

Eigen::MatrixXd gen_brownian(std::size_t n, std::size_t p, std::uint64_t seed) {
  if (p < 2) fail(ErrorKind::InvalidArgument, "Brownian motion needs p >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(p - 1)));
  const auto nn = static_cast<Eigen::Index>(n);
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd x(nn, pp);
  for (Eigen::Index i = 0; i < nn; ++i) {
    double level = 0.0;
    x(i, 0) = 0.0;
    for (Eigen::Index j = 1; j < pp; ++j) {
      level += normal(rng);
      x(i, j) = level;
    }
  }
  return x;
}

std::vector<std::size_t> snap_taus(const std::vector<double>& taus, const Grid& grid, bool strict) {
  std::vector<std::size_t> out;
  out.reserve(taus.size());
  for (double t : taus) {
    const auto j = grid.nearest_index(t);
    if (strict && std::abs(grid[j] - t) > 1e-9) {
      fail(ErrorKind::TauOffGrid, "tau=" + std::to_string(t) + " is not a grid point (nearest " +
                                      std::to_string(grid[j]) + ")");
    }
    out.push_back(j);
  }
  return out;
}

Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, const DgpSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto p = static_cast<std::size_t>(x.cols());
  const Grid grid(p);
  Eigen::VectorXd beta(x.cols());
  for (std::size_t j = 0; j < p; ++j) beta(static_cast<Eigen::Index>(j)) = spec.beta(grid[j]);
  Eigen::VectorXd y = x * beta / static_cast<double>(p);
  const auto idx = snap_taus(spec.taus, grid, spec.strict_taus);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    y += spec.betas[s] * x.col(static_cast<Eigen::Index>(idx[s]));
  }
  if (spec.sigma_eps > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, spec.sigma_eps);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += normal(rng);
  }
  return y;
}

DetectionResult detection_check(const std::vector<double>& estimates, const std::vector<double>& truth,
                                double tolerance) {
  DetectionResult out;
  out.found.assign(truth.size(), false);
  out.match.assign(truth.size(), std::nullopt);
  std::vector<bool> used(estimates.size(), false);
  for (std::size_t s = 0; s < truth.size(); ++s) {
    std::optional<std::size_t> best;
    double best_dist = tolerance;
    for (std::size_t e = 0; e < estimates.size(); ++e) {
      if (used[e]) continue;
      const double d = std::abs(estimates[e] - truth[s]);
      if (d < best_dist) {
        best_dist = d;
        best = e;
      }
    }
    if (best) {
      used[*best] = true;
      out.found[s] = true;
      out.match[s] = best;
    }
  }
  out.all = std::all_of(out.found.begin(), out.found.end(), [](bool b) { return b; });
  return out;
}

StudyReport run_study(const DgpSpec& spec, const std::vector<Variant>& estimators,
                      const StudyOptions& options) {
  spec.validate();
  if (options.replications < 2) fail(ErrorKind::InvalidArgument, "a study needs at least 2 replications");
  if (estimators.empty()) fail(ErrorKind::InvalidArgument, "a study needs at least one estimator");

  const std::size_t reps = options.replications;
  const std::size_t e_count = estimators.size();
  const Grid grid(spec.p);
  Eigen::VectorXd beta_true(static_cast<Eigen::Index>(spec.p));
  for (std::size_t j = 0; j < spec.p; ++j) beta_true(static_cast<Eigen::Index>(j)) = spec.beta(grid[j]);
  const auto tau_idx = snap_taus(spec.taus, grid, spec.strict_taus);

  // Prime the shared penalty cache before the workers start.
  (void)penalty_cache(spec.p);

  std::vector<std::vector<ReplicationOutcome>> outcomes(reps, std::vector<ReplicationOutcome>(e_count));
  parallel_for(reps, options.threads, [&](std::size_t r) {
    const std::uint64_t rs = replication_seed(options.seed, r);
    const Eigen::MatrixXd x = gen_brownian(spec.n, spec.p, rs);
    Eigen::VectorXd y = gen_response(x, spec, mix_seed(rs));
    const FunctionalDataset ds(x, std::move(y));
    for (std::size_t e = 0; e < e_count; ++e) {
      auto& out = outcomes[r][e];
      SelectorConfig cfg = options.selector;
      cfg.variant = estimators[e];
      cfg.standardize_preselect = spec.standardize_preselect;
      try {
        const auto fit = run_variant(ds, cfg);
        out.ok = true;
        out.beta_grid = fit.estimate.beta_grid;
        for (const auto& poi : fit.pois) {
          out.locations.push_back(poi.location);
          out.coefficients.push_back(poi.coefficient);
        }
      } catch (const Error& err) {
        out.ok = false;
        out.failure = err.what();
      }
    }
  });

  StudyReport report;
  report.dgp = spec.name;
  report.n = spec.n;
  report.p = spec.p;
  report.sigma_eps = spec.sigma_eps;
  report.taus = spec.taus;
  report.betas = spec.betas;
  report.replications = reps;
  report.seed = options.seed;

  // Matching uses the grid locations the data were generated at.
  std::vector<double> tau_grid;
  for (auto j : tau_idx) tau_grid.push_back(grid[j]);
  const double pd = static_cast<double>(spec.p);

  if (options.curves) options.curves->assign(e_count, {});
  for (std::size_t e = 0; e < e_count; ++e) {
    EstimatorSummary sum;
    sum.estimator = estimators[e];
    VectorMoments curve;
    std::vector<ScalarMoments> coef(spec.taus.size());
    std::vector<std::size_t> found(spec.taus.size(), 0);
    std::size_t all_found = 0;
    double selected_total = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& out = outcomes[r][e];
      if (!out.ok) {
        ++sum.failures;
        if (std::find(sum.failure_messages.begin(), sum.failure_messages.end(), out.failure) ==
            sum.failure_messages.end()) {
          sum.failure_messages.push_back(out.failure);
        }
        continue;
      }
      curve.add(out.beta_grid);
      if (options.curves) (*options.curves)[e].push_back(out.beta_grid);
      selected_total += static_cast<double>(out.locations.size());
      const auto det = detection_check(out.locations, tau_grid);
      if (det.all) ++all_found;
      for (std::size_t s = 0; s < spec.taus.size(); ++s) {
        if (!det.found[s]) continue;
        ++found[s];
        coef[s].add(out.coefficients[*det.match[s]]);
      }
    }
    sum.replications = curve.count;
    if (curve.count > 0) {
      const double rc = static_cast<double>(curve.count);
      sum.bias2_beta = (curve.mean - beta_true).squaredNorm() / pd;
      sum.var_beta = curve.m2.sum() / rc / pd;
      sum.mean_selected = selected_total / rc;
      if (!spec.taus.empty()) sum.detect_pct = 100.0 * static_cast<double>(all_found) / rc;
    }
    double bias_acc = 0.0;
    double var_acc = 0.0;
    std::size_t counted = 0;
    for (std::size_t s = 0; s < spec.taus.size(); ++s) {
      PoiSummary ps;
      ps.tau = spec.taus[s];
      ps.beta = spec.betas[s];
      ps.found = found[s];
      if (coef[s].count > 0) {
        ps.mean_coefficient = coef[s].mean;
        ps.bias2 = (coef[s].mean - spec.betas[s]) * (coef[s].mean - spec.betas[s]);
        ps.variance = coef[s].m2 / static_cast<double>(coef[s].count);
        bias_acc += *ps.bias2;
        var_acc += *ps.variance;
        ++counted;
      }
      sum.pois.push_back(ps);
    }
    if (counted > 0) {
      sum.bias2_pois = bias_acc / static_cast<double>(counted);
      sum.var_pois = var_acc / static_cast<double>(counted);
    }
    report.estimators.push_back(std::move(sum));
  }
  return report;
}

}  // namespace flrpoi
