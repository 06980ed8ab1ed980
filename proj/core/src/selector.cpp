#include "flrpoi/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

#include "flrpoi/error.hpp"
#include "flrpoi/kpsbench.hpp"

namespace flrpoi {

namespace {

constexpr double kCollinearTol = 1e-10;

// Gram-Schmidt sweep over the columns in order; a column whose residual
// after projecting out the kept ones is negligible is reported as dependent.
struct ColumnSweep {
  Eigen::MatrixXd basis;  // orthonormal kept columns
  Eigen::Index kept = 0;

  explicit ColumnSweep(Eigen::Index rows, Eigen::Index max_cols) : basis(rows, max_cols) {}

  // Returns false (and keeps nothing) if col is in the span of the kept columns.
  bool add(const Eigen::VectorXd& col) {
    const double norm = col.norm();
    if (!(norm > 0.0)) return false;
    Eigen::VectorXd r = col;
    for (int pass = 0; pass < 2; ++pass) {
      if (kept > 0) r -= basis.leftCols(kept) * (basis.leftCols(kept).transpose() * r);
    }
    const double rn = r.norm();
    if (!(rn > kCollinearTol * norm)) return false;
    basis.col(kept++) = r / rn;
    return true;
  }
};

// GCV fits memoized per PoI index list; each distinct set is fitted once per dataset.
class FitMemo {
 public:
  FitMemo(const SmootherBasis& basis, const RhoGrid& grid) : basis_(basis), grid_(grid) {}

  const SlopeEstimate& fit(const std::vector<std::size_t>& indices) {
    auto it = memo_.find(indices);
    if (it == memo_.end()) {
      SpectralSmoother smoother(basis_, indices);
      it = memo_.emplace(indices, optimize_gcv(smoother, grid_)).first;
    }
    return it->second;
  }

 private:
  const SmootherBasis& basis_;
  const RhoGrid& grid_;
  std::map<std::vector<std::size_t>, SlopeEstimate> memo_;
};

int resubselect_rounds(Variant v) {
  switch (v) {
    case Variant::PesEs:
      return 1;
    case Variant::Pes2Es:
      return 2;
    default:
      return 0;
  }
}

void attach_pois(FitResult& out, const std::vector<std::size_t>& indices, const Grid& grid) {
  out.pois.clear();
  for (std::size_t s = 0; s < indices.size(); ++s) {
    SelectedPoI poi;
    poi.index = indices[s];
    poi.location = grid[indices[s]];
    poi.coefficient = out.estimate.beta_poi(static_cast<Eigen::Index>(s));
    out.pois.push_back(poi);
  }
}

void attach_standard_errors(FitResult& out, const PreparedData& data, const PenaltyCache& pen) {
  const auto indices = out.poi_indices();
  const auto design = augment(data.centered.xc, pen.bundle, indices);
  Eigen::VectorXd se = standard_errors(design, data.centered.yc, out.estimate.rho);
  const auto p = static_cast<Eigen::Index>(data.p());
  for (std::size_t s = 0; s < out.pois.size(); ++s) {
    out.pois[s].std_error = se(p + static_cast<Eigen::Index>(s));
  }
  out.standard_errors = std::move(se);
}

}  // namespace

std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x,
                                             const std::vector<std::size_t>& indices) {
  ColumnSweep sweep(x.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<std::size_t> out;
  for (auto j : indices) {
    if (sweep.add(x.col(static_cast<Eigen::Index>(j)))) out.push_back(j);
  }
  return out;
}

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Pes:
      return "pes";
    case Variant::PesEs:
      return "pes-es";
    case Variant::Pes2Es:
      return "pes-2es";
    case Variant::Cks:
      return "cks";
    case Variant::Kps:
      return "kps";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::Pes, Variant::PesEs, Variant::Pes2Es, Variant::Cks, Variant::Kps}) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorKind::InvalidArgument,
       "unknown estimator '" + std::string(name) + "' (valid: pes, pes-es, pes-2es, cks, kps)");
}

std::vector<double> log_delta_grid(std::size_t p, std::size_t count, double lo, double hi) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
    fail(ErrorKind::DeltaOutOfRange, "delta grid needs count >= 1 and 0 < min <= max");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double raw = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * frac);
    try {
      const DeltaSpec spec(raw, p);
      if (out.empty() || spec.delta() > out.back()) out.push_back(spec.delta());
    } catch (const Error&) {
      // inadmissible for this grid size
    }
  }
  if (out.empty()) fail(ErrorKind::DeltaOutOfRange, "no admissible delta for p=" + std::to_string(p));
  return out;
}

std::vector<double> default_delta_grid(std::size_t p) {
  if (p < 5) fail(ErrorKind::InvalidArgument, "grid too small for a delta grid");
  const double lo = 2.0 / static_cast<double>(p - 1);
  return log_delta_grid(p, 10, lo, std::max(lo, 0.1));
}

std::shared_ptr<const PenaltyCache> penalty_cache(std::size_t p) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const PenaltyCache>> cache;
  const std::lock_guard lock(mutex);
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  Grid grid(p);
  auto bundle = build_penalty(grid);
  auto spectrum = decompose_penalty(bundle.combined);
  auto entry = std::make_shared<const PenaltyCache>(
      PenaltyCache{std::move(grid), std::move(bundle), std::move(spectrum)});
  cache.emplace(p, entry);
  return entry;
}

PreparedData prepare(const FunctionalDataset& ds, const SelectorConfig& cfg) {
  auto centered = center(ds);
  const double floor = cfg.sd_floor ? *cfg.sd_floor : default_sd_floor(centered);
  auto standardized = standardize(centered, floor);
  return PreparedData{std::move(centered), std::move(standardized), floor};
}

PoICandidateList preselect(const PreparedData& data, const DeltaSpec& spec,
                           const SelectorConfig& cfg) {
  auto list = cfg.standardize_preselect
                  ? search_potential_pois(data.standardized.xst, data.standardized.yst, spec)
                  : search_potential_pois(data.centered.xc, data.centered.yc, spec);
  if (cfg.max_candidates && list.candidates.size() > *cfg.max_candidates) {
    list.candidates.resize(*cfg.max_candidates);
  }
  return list;
}

Eigen::VectorXd neutralize_response(const Eigen::VectorXd& yc, const Eigen::MatrixXd& xc,
                                    const Eigen::VectorXd& beta_grid, double sd_floor) {
  if (xc.rows() != yc.size() || xc.cols() != beta_grid.size()) {
    fail(ErrorKind::ShapeMismatch, "neutralize_response: inconsistent shapes");
  }
  Eigen::VectorXd v = yc - xc * beta_grid / static_cast<double>(xc.cols());
  const double sd = population_sd(v);
  if (!(sd >= sd_floor)) fail(ErrorKind::DegenerateResponse, "neutralized response has sd below floor");
  return v / sd;
}

double bic_subset(const std::vector<std::size_t>& columns, const Eigen::VectorXd& v,
                  const Eigen::MatrixXd& xst) {
  const auto n = static_cast<double>(v.size());
  if (xst.rows() != v.size()) fail(ErrorKind::ShapeMismatch, "bic_subset: inconsistent shapes");
  double rss = v.squaredNorm();
  if (!columns.empty()) {
    Eigen::MatrixXd z(xst.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t s = 0; s < columns.size(); ++s) {
      if (columns[s] >= static_cast<std::size_t>(xst.cols())) {
        fail(ErrorKind::InvalidArgument, "bic_subset: column index out of range");
      }
      z.col(static_cast<Eigen::Index>(s)) = xst.col(static_cast<Eigen::Index>(columns[s]));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    const auto& r = qr.matrixR();
    const double lead = std::abs(r(0, 0));
    for (Eigen::Index s = 0; s < z.cols(); ++s) {
      if (!(lead > 0.0) || !(std::abs(r(s, s)) > kCollinearTol * lead)) {
        fail(ErrorKind::CollinearPoIColumns, "PoI columns are rank deficient");
      }
    }
    rss = (v - z * qr.solve(v)).squaredNorm();
  }
  return n * std::log(rss / n) + std::log(n) * static_cast<double>(columns.size());
}

Subselection subselect(const std::vector<std::size_t>& candidates, const Eigen::VectorXd& v,
                       const Eigen::MatrixXd& xst) {
  if (xst.rows() != v.size()) fail(ErrorKind::ShapeMismatch, "subselect: inconsistent shapes");
  const auto n = static_cast<double>(v.size());
  Subselection out;
  ColumnSweep sweep(xst.rows(), static_cast<Eigen::Index>(candidates.size()));
  Eigen::VectorXd residual = v;
  out.bic.push_back(n * std::log(residual.squaredNorm() / n));
  for (auto j : candidates) {
    if (j >= static_cast<std::size_t>(xst.cols())) {
      fail(ErrorKind::InvalidArgument, "subselect: candidate index out of range");
    }
    if (!sweep.add(xst.col(static_cast<Eigen::Index>(j)))) {
      out.dropped.push_back(j);
      continue;
    }
    out.usable.push_back(j);
    const auto q = sweep.basis.col(sweep.kept - 1);
    residual -= q * q.dot(residual);
    const double m = static_cast<double>(out.usable.size());
    out.bic.push_back(n * std::log(residual.squaredNorm() / n) + std::log(n) * m);
  }
  std::size_t best = 0;
  for (std::size_t m = 1; m < out.bic.size(); ++m) {
    if (out.bic[m] < out.bic[best]) best = m;
  }
  out.selected.assign(out.usable.begin(), out.usable.begin() + static_cast<std::ptrdiff_t>(best));
  return out;
}

double bic_delta(double rss, double edf, std::size_t n) {
  const auto nn = static_cast<double>(n);
  return nn * std::log(rss / nn) + std::log(nn) * edf;
}

std::vector<std::size_t> FitResult::poi_indices() const {
  std::vector<std::size_t> out;
  out.reserve(pois.size());
  for (const auto& poi : pois) out.push_back(poi.index);
  return out;
}

FitResult run_variant(const FunctionalDataset& ds, const SelectorConfig& cfg) {
  if (cfg.variant == Variant::Kps) return kps_fit(ds, cfg);

  const std::size_t p = ds.p();
  const std::size_t n = ds.n();
  const auto pen = penalty_cache(p);
  const auto data = prepare(ds, cfg);
  const auto& xc = data.centered.xc;
  const auto& yc = data.centered.yc;
  const SmootherBasis basis(xc, yc, pen->spectrum);
  FitMemo memo(basis, cfg.rho_grid);

  FitResult best;
  best.variant = cfg.variant;

  if (cfg.variant == Variant::Cks) {
    best.estimate = memo.fit({});
    best.bic = bic_delta(best.estimate.rss, best.estimate.edf, n);
    if (cfg.standard_errors) attach_standard_errors(best, data, *pen);
    return best;
  }

  const auto deltas = cfg.delta_grid.empty() ? default_delta_grid(p) : cfg.delta_grid;
  std::vector<DeltaSpec> specs;
  specs.reserve(deltas.size());
  for (double d : deltas) specs.emplace_back(d, p);

  const int rounds = resubselect_rounds(cfg.variant);
  bool have_best = false;
  std::vector<DeltaTrace> trace;
  for (const auto& spec : specs) {
    DeltaTrace row;
    row.delta = spec.delta();
    row.k_delta = spec.offset();
    try {
      const auto list = preselect(data, spec, cfg);
      const auto candidates = independent_columns(xc, list.indices());
      row.candidates = candidates.size();

      const SlopeEstimate* est = &memo.fit(candidates);
      auto v = neutralize_response(yc, xc, est->beta_grid, data.sd_floor);
      std::vector<std::size_t> selected = subselect(candidates, v, data.standardized.xst).selected;
      const auto first = selected;
      for (int r = 0; r < rounds; ++r) {
        est = &memo.fit(selected);
        v = neutralize_response(yc, xc, est->beta_grid, data.sd_floor);
        selected = subselect(selected, v, data.standardized.xst).selected;
      }
      const SlopeEstimate& final_fit = memo.fit(selected);
      row.bic = bic_delta(final_fit.rss, final_fit.edf, n);
      row.selected = selected.size();
      row.ok = std::isfinite(row.bic);
      if (!row.ok) row.failure = "non-finite BIC";
      if (row.ok && (!have_best || row.bic < best.bic)) {
        have_best = true;
        best.estimate = final_fit;
        best.delta = spec.delta();
        best.k_delta = spec.offset();
        best.bic = row.bic;
        best.preselected = candidates;
        best.first_selection = first;
        attach_pois(best, selected, pen->grid);
      }
    } catch (const Error& e) {
      row.ok = false;
      row.failure = e.what();
    }
    trace.push_back(std::move(row));
  }
  if (!have_best) {
    std::string reasons;
    for (const auto& row : trace) reasons += "\n  delta=" + std::to_string(row.delta) + ": " + row.failure;
    fail(ErrorKind::AllDeltaFailed, "every delta on the grid failed:" + reasons);
  }
  best.trace = std::move(trace);
  if (cfg.standard_errors) attach_standard_errors(best, data, *pen);
  return best;
}

}  // namespace flrpoi
