#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "flrpoi/error.hpp"
#include "flrpoi/funspace.hpp"
#include "flrpoi/poisearch.hpp"
#include "flrpoi/report_io.hpp"
#include "flrpoi/selector.hpp"
#include "flrpoi/simlab.hpp"
#include "flrpoi/study_config.hpp"

namespace flrpoi::cli {

namespace {

struct RhoFlags {
  std::optional<double> min;
  std::optional<double> max;
  std::optional<int> points;

  void add(CLI::App& app) {
    app.add_option("--rho-min", min, "Smallest rho of the GCV grid");
    app.add_option("--rho-max", max, "Largest rho of the GCV grid");
    app.add_option("--rho-points", points, "Number of log-spaced rho values")->check(CLI::PositiveNumber);
  }
  void apply(RhoGrid& grid) const {
    if (min) grid.min = *min;
    if (max) grid.max = *max;
    if (points) grid.points = *points;
    (void)grid.values();
  }
};

struct FitFlags {
  std::string x, y, estimator = "pes-es", out, format = "json", dump_penalty;
  std::vector<double> delta_grid;
  RhoFlags rho;
  bool header = false;
  bool no_standardize = false;
  bool standard_errors = false;
  std::size_t kps_components = 150;
};

struct SimulateFlags {
  std::string config, out, format = "json";
  std::vector<std::string> estimators;
  std::vector<double> delta_grid;
  RhoFlags rho;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> replications;
  bool no_standardize = false;
};

struct KappaFlags {
  std::string x, out;
  double delta = 0.04;
  bool header = false;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::InvalidArgument, "cannot write " + path);
  file << text;
  if (!file) fail(ErrorKind::InvalidArgument, "failed writing " + path);
}

void dump_penalty(std::size_t p, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::InvalidArgument, "cannot create " + dir.string() + ": " + ec.message());
  const auto cache = penalty_cache(p);
  write_csv(cache->bundle.projection, dir / "projection.csv");
  write_csv(cache->bundle.curvature, dir / "curvature.csv");
  write_csv(cache->bundle.combined, dir / "combined.csv");
}

int cmd_fit(const FitFlags& f, std::ostream& out) {
  CsvOptions csv;
  csv.has_header = f.header;
  const auto ds = load_csv(f.x, f.y, csv);
  SelectorConfig cfg;
  cfg.variant = parse_variant(f.estimator);
  cfg.delta_grid = f.delta_grid;
  f.rho.apply(cfg.rho_grid);
  cfg.standardize_preselect = !f.no_standardize;
  cfg.standard_errors = f.standard_errors;
  cfg.kps_max_components = f.kps_components;
  if (!f.dump_penalty.empty()) dump_penalty(ds.p(), f.dump_penalty);
  const auto fit = run_variant(ds, cfg);
  emit(f.format == "csv" ? fit_to_csv(fit, ds.grid()) : fit_to_json(fit, ds.grid()), f.out, out);
  return kOk;
}

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  auto cfg = load_study_config(f.config);
  if (!f.estimators.empty()) {
    cfg.estimators.clear();
    for (const auto& name : f.estimators) cfg.estimators.push_back(parse_variant(name));
  }
  if (!f.delta_grid.empty()) {
    cfg.selector.delta_grid = f.delta_grid;
    for (double d : f.delta_grid) (void)DeltaSpec(d, cfg.dgp.p);
  }
  f.rho.apply(cfg.selector.rho_grid);
  if (f.no_standardize) cfg.dgp.standardize_preselect = false;
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (f.replications) cfg.replications = *f.replications;

  StudyOptions options;
  options.replications = cfg.replications;
  options.seed = cfg.seed;
  options.threads = cfg.threads;
  options.selector = cfg.selector;
  const auto report = run_study(cfg.dgp, cfg.estimators, options);
  emit(f.format == "csv" ? study_to_csv(report) : study_to_json(report), f.out, out);
  return kOk;
}

int cmd_kappa(const KappaFlags& f, std::ostream& out) {
  CsvOptions csv;
  csv.has_header = f.header;
  const auto x = read_csv_matrix(f.x, csv);
  if (x.rows() < 2) fail(ErrorKind::ShapeMismatch, "need at least 2 trajectories");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const DeltaSpec spec(f.delta, static_cast<std::size_t>(x.cols()));
  const auto k = estimate_kappa(xc, spec);
  emit(kappa_to_json(k, spec), f.out, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional linear regression with points of impact"};
  app.name("flrpoi");
  app.require_subcommand(1);

  FitFlags fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate beta and the points of impact from CSV data");
  fit_cmd->add_option("--x", fit.x, "Predictor CSV, one trajectory per row")->required();
  fit_cmd->add_option("--y", fit.y, "Response CSV, one value per line")->required();
  fit_cmd->add_flag("--header", fit.header, "Skip a header row in both CSV files");
  fit_cmd->add_option("--estimator", fit.estimator, "pes, pes-es, pes-2es, cks or kps")->capture_default_str();
  fit_cmd->add_option("--delta-grid", fit.delta_grid, "Comma-separated delta values")->delimiter(',');
  fit.rho.add(*fit_cmd);
  fit_cmd->add_flag("--no-standardize-preselect", fit.no_standardize, "Run the candidate search on centered data");
  fit_cmd->add_flag("--standard-errors", fit.standard_errors, "Report pointwise standard errors");
  fit_cmd->add_option("--kps-components", fit.kps_components, "Cap on FPCA components for kps")
      ->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--dump-penalty", fit.dump_penalty, "Write P, A* and A as CSV into this directory");
  fit_cmd->add_option("--out", fit.out, "Output file (default: stdout)");
  fit_cmd->add_option("--format", fit.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte-Carlo study described by a TOML file");
  sim_cmd->add_option("--config", sim.config, "Study TOML file")->required();
  sim_cmd->add_option("--estimator", sim.estimators, "Comma-separated estimators (overrides the config)")->delimiter(',');
  sim_cmd->add_option("--delta-grid", sim.delta_grid, "Comma-separated delta values")->delimiter(',');
  sim.rho.add(*sim_cmd);
  sim_cmd->add_option("--seed", sim.seed, "Master seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0: all cores)");
  sim_cmd->add_option("--replications", sim.replications, "Number of replications")->check(CLI::Range(2, 1 << 30));
  sim_cmd->add_flag("--no-standardize-preselect", sim.no_standardize, "Run the candidate search on centered data");
  sim_cmd->add_option("--out", sim.out, "Output file (default: stdout)");
  sim_cmd->add_option("--format", sim.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  KappaFlags kap;
  auto* kap_cmd = app.add_subcommand("kappa", "Estimate the covariance roughness exponent kappa");
  kap_cmd->add_option("--x", kap.x, "Predictor CSV, one trajectory per row")->required();
  kap_cmd->add_flag("--header", kap.header, "Skip a header row");
  kap_cmd->add_option("--delta", kap.delta, "Offset delta; k = round(delta (p-1)) must be even")->capture_default_str();
  kap_cmd->add_option("--out", kap.out, "Output file (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*sim_cmd) return cmd_simulate(sim, out);
    return cmd_kappa(kap, out);
  } catch (const Error& e) {
    err << "flrpoi: " << e.what() << '\n';
    return e.is_input_error() ? kInputError : kEstimationError;
  } catch (const std::exception& e) {
    err << "flrpoi: " << e.what() << '\n';
    return kEstimationError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace flrpoi::cli
