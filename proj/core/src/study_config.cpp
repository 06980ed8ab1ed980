#include "flrpoi/study_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "flrpoi/error.hpp"
#include "toml.hpp"

namespace flrpoi {

namespace {

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::ConfigError, msg); }

void reject_unknown(const toml::table& table, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : table) {
    if (!allowed.count(std::string(key.str()))) {
      std::string valid;
      for (const auto& a : allowed) valid += (valid.empty() ? "" : ", ") + a;
      config_error("unknown key '" + std::string(key.str()) + "' in " + where + " (valid: " + valid + ")");
    }
  }
}

double get_number(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  config_error("'" + key + "' must be a number");
}

std::int64_t get_integer(const toml::node& node, const std::string& key) {
  if (!node.is_integer()) config_error("'" + key + "' must be an integer");
  return *node.value<std::int64_t>();
}

std::size_t get_count(const toml::node& node, const std::string& key, std::int64_t min_value) {
  const auto v = get_integer(node, key);
  if (v < min_value) config_error("'" + key + "' must be >= " + std::to_string(min_value));
  return static_cast<std::size_t>(v);
}

std::vector<double> get_numbers(const toml::node& node, const std::string& key) {
  const auto* arr = node.as_array();
  if (!arr) config_error("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : *arr) out.push_back(get_number(item, key));
  return out;
}

}  // namespace

StudyConfig parse_study_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML: " << e.description() << " at line " << e.source().begin.line;
    fail(ErrorKind::ParseError, msg.str());
  }
  reject_unknown(root,
                 {"dgp", "n", "p", "sigma_eps", "estimators", "replications", "seed", "threads",
                  "standardize_preselect", "strict_taus", "max_candidates", "kps_max_components",
                  "delta_grid", "rho_grid", "custom"},
                 "study config");

  StudyConfig cfg;
  const auto* dgp_node = root.get("dgp");
  if (!dgp_node || !dgp_node->is_string()) config_error("'dgp' (string) is required");
  const auto name = parse_dgp_name(*dgp_node->value<std::string>());
  if (name == DgpName::Custom) {
    const auto* custom = root.get_as<toml::table>("custom");
    if (!custom) config_error("dgp = \"custom\" needs a [custom] table");
    reject_unknown(*custom, {"beta_poly", "taus", "betas"}, "[custom]");
    std::vector<double> poly;
    if (const auto* node = custom->get("beta_poly")) poly = get_numbers(*node, "custom.beta_poly");
    cfg.dgp.name = DgpName::Custom;
    cfg.dgp.beta = [poly](double t) {
      double acc = 0.0;
      for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * t + *it;
      return acc;
    };
    if (const auto* node = custom->get("taus")) cfg.dgp.taus = get_numbers(*node, "custom.taus");
    if (const auto* node = custom->get("betas")) cfg.dgp.betas = get_numbers(*node, "custom.betas");
  } else {
    if (root.get("custom")) config_error("[custom] is only valid with dgp = \"custom\"");
    cfg.dgp = DgpSpec::named(name);
  }

  if (const auto* node = root.get("n")) cfg.dgp.n = get_count(*node, "n", 2);
  if (const auto* node = root.get("p")) cfg.dgp.p = get_count(*node, "p", 5);
  if (const auto* node = root.get("sigma_eps")) cfg.dgp.sigma_eps = get_number(*node, "sigma_eps");
  if (const auto* node = root.get("standardize_preselect")) {
    if (!node->is_boolean()) config_error("'standardize_preselect' must be a boolean");
    cfg.dgp.standardize_preselect = *node->value<bool>();
  }
  cfg.selector.standardize_preselect = cfg.dgp.standardize_preselect;
  if (const auto* node = root.get("strict_taus")) {
    if (!node->is_boolean()) config_error("'strict_taus' must be a boolean");
    cfg.dgp.strict_taus = *node->value<bool>();
  }
  try {
    cfg.dgp.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }

  if (const auto* node = root.get("estimators")) {
    const auto* arr = node->as_array();
    if (!arr || arr->empty()) config_error("'estimators' must be a non-empty array of names");
    cfg.estimators.clear();
    for (const auto& item : *arr) {
      if (!item.is_string()) config_error("'estimators' entries must be strings");
      try {
        cfg.estimators.push_back(parse_variant(*item.value<std::string>()));
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
  }
  if (const auto* node = root.get("replications")) cfg.replications = get_count(*node, "replications", 2);
  if (const auto* node = root.get("seed")) {
    const auto v = get_integer(*node, "seed");
    if (v < 0) config_error("'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (const auto* node = root.get("threads")) cfg.threads = static_cast<unsigned>(get_count(*node, "threads", 0));
  if (const auto* node = root.get("max_candidates")) {
    cfg.selector.max_candidates = get_count(*node, "max_candidates", 1);
  }
  if (const auto* node = root.get("kps_max_components")) {
    cfg.selector.kps_max_components = get_count(*node, "kps_max_components", 1);
  }

  if (const auto* node = root.get("delta_grid")) {
    try {
      if (node->is_array()) {
        cfg.selector.delta_grid = get_numbers(*node, "delta_grid");
        if (cfg.selector.delta_grid.empty()) config_error("'delta_grid' must not be empty");
        for (double d : cfg.selector.delta_grid) (void)DeltaSpec(d, cfg.dgp.p);
      } else if (const auto* table = node->as_table()) {
        reject_unknown(*table, {"count", "min", "max"}, "[delta_grid]");
        std::size_t count = 10;
        double lo = 2.0 / static_cast<double>(cfg.dgp.p - 1);
        double hi = 0.1;
        if (const auto* v = table->get("count")) count = get_count(*v, "delta_grid.count", 1);
        if (const auto* v = table->get("min")) lo = get_number(*v, "delta_grid.min");
        if (const auto* v = table->get("max")) hi = get_number(*v, "delta_grid.max");
        cfg.selector.delta_grid = log_delta_grid(cfg.dgp.p, count, lo, hi);
      } else {
        config_error("'delta_grid' must be an array or a table");
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      config_error(e.what());
    }
  }
  if (const auto* table = root.get_as<toml::table>("rho_grid")) {
    reject_unknown(*table, {"min", "max", "points", "refine"}, "[rho_grid]");
    auto& rho = cfg.selector.rho_grid;
    if (const auto* v = table->get("min")) rho.min = get_number(*v, "rho_grid.min");
    if (const auto* v = table->get("max")) rho.max = get_number(*v, "rho_grid.max");
    if (const auto* v = table->get("points")) rho.points = static_cast<int>(get_count(*v, "rho_grid.points", 1));
    if (const auto* v = table->get("refine")) {
      if (!v->is_boolean()) config_error("'rho_grid.refine' must be a boolean");
      rho.refine = *v->value<bool>();
    }
    try {
      (void)rho.values();
    } catch (const Error& e) {
      config_error(e.what());
    }
  } else if (root.get("rho_grid")) {
    config_error("'rho_grid' must be a table");
  }
  return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_study_config(text.str());
}

}  // namespace flrpoi
