#include "flrpoi/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "flrpoi/error.hpp"
#include "json.hpp"

namespace flrpoi {

namespace {

using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

template <class T>
ordered_json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) return num(*v);
  return ordered_json(*v);
}

ordered_json vec(const Eigen::VectorXd& v) {
  auto arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(num(v(i)));
  return arr;
}

double get_num(const ordered_json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::optional<double> get_opt_num(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Eigen::VectorXd get_vec(const ordered_json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_num(j[i]);
  return v;
}

std::vector<double> get_doubles(const ordered_json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(get_num(x));
  return out;
}

template <class F>
auto parsing(F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("JSON: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::ParseError, std::string("JSON: ") + e.what());
  }
}

// Shortest representation that reads back exactly.
std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::string fit_to_json(const FitResult& fit, const Grid& grid) {
  ordered_json j;
  j["estimator"] = std::string(to_string(fit.variant));
  j["grid"] = grid.points();
  j["beta_grid"] = vec(fit.estimate.beta_grid);
  auto pois = ordered_json::array();
  for (const auto& poi : fit.pois) {
    pois.push_back({{"index", poi.index},
                    {"location", num(poi.location)},
                    {"coefficient", num(poi.coefficient)},
                    {"std_err", opt(poi.std_error)}});
  }
  j["pois"] = pois;
  j["rho"] = num(fit.estimate.rho);
  j["delta"] = opt(fit.delta);
  j["k_delta"] = fit.k_delta;
  j["edf"] = num(fit.estimate.edf);
  j["bic"] = num(fit.bic);
  j["rss"] = num(fit.estimate.rss);
  j["gcv"] = num(fit.estimate.gcv_value);
  j["trace_h"] = num(fit.estimate.smoother_trace);
  j["components"] = opt(fit.components);
  j["beta_std_err"] = fit.standard_errors ? vec(fit.standard_errors->head(grid.size())) : ordered_json(nullptr);
  j["preselected"] = fit.preselected;
  j["first_selection"] = fit.first_selection;
  auto trace = ordered_json::array();
  for (const auto& row : fit.trace) {
    trace.push_back({{"delta", num(row.delta)},
                     {"k_delta", row.k_delta},
                     {"ok", row.ok},
                     {"bic", num(row.bic)},
                     {"candidates", row.candidates},
                     {"selected", row.selected},
                     {"failure", row.failure}});
  }
  j["delta_trace"] = trace;
  return j.dump(2) + "\n";
}

FitResult fit_from_json(std::string_view text) {
  return parsing([&] {
    const auto j = ordered_json::parse(text);
    FitResult fit;
    fit.variant = parse_variant(j.at("estimator").get<std::string>());
    fit.estimate.beta_grid = get_vec(j.at("beta_grid"));
    const auto p = static_cast<std::size_t>(fit.estimate.beta_grid.size());
    std::vector<double> std_errs;
    for (const auto& pj : j.at("pois")) {
      SelectedPoI poi;
      poi.index = pj.at("index").get<std::size_t>();
      poi.location = get_num(pj.at("location"));
      poi.coefficient = get_num(pj.at("coefficient"));
      poi.std_error = get_opt_num(pj, "std_err");
      if (poi.std_error) std_errs.push_back(*poi.std_error);
      fit.pois.push_back(poi);
    }
    fit.estimate.beta_poi.resize(static_cast<Eigen::Index>(fit.pois.size()));
    for (std::size_t s = 0; s < fit.pois.size(); ++s) {
      fit.estimate.beta_poi(static_cast<Eigen::Index>(s)) = fit.pois[s].coefficient;
    }
    fit.estimate.rho = get_num(j.at("rho"));
    fit.delta = get_opt_num(j, "delta");
    fit.k_delta = j.at("k_delta").get<std::size_t>();
    fit.estimate.edf = get_num(j.at("edf"));
    fit.bic = get_num(j.at("bic"));
    fit.estimate.rss = get_num(j.at("rss"));
    fit.estimate.gcv_value = get_num(j.at("gcv"));
    fit.estimate.smoother_trace = get_num(j.at("trace_h"));
    if (!j.at("components").is_null()) fit.components = j.at("components").get<std::size_t>();
    if (!j.at("beta_std_err").is_null()) {
      const auto head = get_vec(j.at("beta_std_err"));
      if (static_cast<std::size_t>(head.size()) != p || std_errs.size() != fit.pois.size()) {
        fail(ErrorKind::ParseError, "standard errors do not match beta_grid and pois");
      }
      Eigen::VectorXd se(head.size() + static_cast<Eigen::Index>(std_errs.size()));
      se.head(head.size()) = head;
      for (std::size_t s = 0; s < std_errs.size(); ++s) se(head.size() + static_cast<Eigen::Index>(s)) = std_errs[s];
      fit.standard_errors = se;
    }
    fit.preselected = j.at("preselected").get<std::vector<std::size_t>>();
    fit.first_selection = j.at("first_selection").get<std::vector<std::size_t>>();
    for (const auto& rj : j.at("delta_trace")) {
      DeltaTrace row;
      row.delta = get_num(rj.at("delta"));
      row.k_delta = rj.at("k_delta").get<std::size_t>();
      row.ok = rj.at("ok").get<bool>();
      row.bic = rj.at("bic").is_null() ? std::numeric_limits<double>::infinity() : rj.at("bic").get<double>();
      row.candidates = rj.at("candidates").get<std::size_t>();
      row.selected = rj.at("selected").get<std::size_t>();
      row.failure = rj.at("failure").get<std::string>();
      fit.trace.push_back(row);
    }
    return fit;
  });
}

std::string fit_to_csv(const FitResult& fit, const Grid& grid) {
  std::ostringstream out;
  out << "kind,index,location,value\n";
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out << "beta," << j << ',' << fmt(grid[j]) << ',' << fmt(fit.estimate.beta_grid(static_cast<Eigen::Index>(j)))
        << '\n';
  }
  for (const auto& poi : fit.pois) {
    out << "poi," << poi.index << ',' << fmt(poi.location) << ',' << fmt(poi.coefficient) << '\n';
  }
  return out.str();
}

std::string study_to_json(const StudyReport& r) {
  ordered_json j;
  j["dgp"] = std::string(to_string(r.dgp));
  j["n"] = r.n;
  j["p"] = r.p;
  j["sigma_eps"] = num(r.sigma_eps);
  j["taus"] = r.taus;
  j["betas"] = r.betas;
  j["replications"] = r.replications;
  j["seed"] = r.seed;
  auto ests = ordered_json::array();
  for (const auto& e : r.estimators) {
    ordered_json ej;
    ej["estimator"] = std::string(to_string(e.estimator));
    ej["replications"] = e.replications;
    ej["failures"] = e.failures;
    ej["bias2_beta"] = num(e.bias2_beta);
    ej["var_beta"] = num(e.var_beta);
    ej["bias2_pois"] = opt(e.bias2_pois);
    ej["var_pois"] = opt(e.var_pois);
    ej["detect_pct"] = opt(e.detect_pct);
    ej["mean_selected"] = num(e.mean_selected);
    auto pois = ordered_json::array();
    for (const auto& p : e.pois) {
      pois.push_back({{"tau", num(p.tau)},
                      {"beta", num(p.beta)},
                      {"found", p.found},
                      {"mean_coefficient", opt(p.mean_coefficient)},
                      {"bias2", opt(p.bias2)},
                      {"variance", opt(p.variance)}});
    }
    ej["pois"] = pois;
    ej["failure_messages"] = e.failure_messages;
    ests.push_back(ej);
  }
  j["estimators"] = ests;
  return j.dump(2) + "\n";
}

StudyReport study_from_json(std::string_view text) {
  return parsing([&] {
    const auto j = ordered_json::parse(text);
    StudyReport r;
    r.dgp = parse_dgp_name(j.at("dgp").get<std::string>());
    r.n = j.at("n").get<std::size_t>();
    r.p = j.at("p").get<std::size_t>();
    r.sigma_eps = get_num(j.at("sigma_eps"));
    r.taus = get_doubles(j.at("taus"));
    r.betas = get_doubles(j.at("betas"));
    r.replications = j.at("replications").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ej : j.at("estimators")) {
      EstimatorSummary e;
      e.estimator = parse_variant(ej.at("estimator").get<std::string>());
      e.replications = ej.at("replications").get<std::size_t>();
      e.failures = ej.at("failures").get<std::size_t>();
      e.bias2_beta = get_num(ej.at("bias2_beta"));
      e.var_beta = get_num(ej.at("var_beta"));
      e.bias2_pois = get_opt_num(ej, "bias2_pois");
      e.var_pois = get_opt_num(ej, "var_pois");
      e.detect_pct = get_opt_num(ej, "detect_pct");
      e.mean_selected = get_num(ej.at("mean_selected"));
      for (const auto& pj : ej.at("pois")) {
        PoiSummary p;
        p.tau = get_num(pj.at("tau"));
        p.beta = get_num(pj.at("beta"));
        p.found = pj.at("found").get<std::size_t>();
        p.mean_coefficient = get_opt_num(pj, "mean_coefficient");
        p.bias2 = get_opt_num(pj, "bias2");
        p.variance = get_opt_num(pj, "variance");
        e.pois.push_back(p);
      }
      e.failure_messages = ej.at("failure_messages").get<std::vector<std::string>>();
      r.estimators.push_back(std::move(e));
    }
    return r;
  });
}

std::string study_to_csv(const StudyReport& r) {
  std::ostringstream out;
  out << "estimator,dgp,n,p,detect_pct,bias2_beta,var_beta,bias2_pois,var_pois\n";
  for (const auto& e : r.estimators) {
    out << to_string(e.estimator) << ',' << to_string(r.dgp) << ',' << r.n << ',' << r.p << ','
        << fmt(e.detect_pct) << ',' << fmt(e.bias2_beta) << ',' << fmt(e.var_beta) << ','
        << fmt(e.bias2_pois) << ',' << fmt(e.var_pois) << '\n';
  }
  return out.str();
}

std::string kappa_to_json(const KappaEstimate& k, const DeltaSpec& spec) {
  ordered_json j;
  j["delta"] = num(spec.delta());
  j["k_delta"] = spec.offset();
  j["kappa"] = num(k.kappa);
  j["mean_square_delta"] = num(k.mean_square_delta);
  j["mean_square_half_delta"] = num(k.mean_square_half_delta);
  j["verdict"] = k.kappa < 2.0 ? ordered_json("identifiable") : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace flrpoi
