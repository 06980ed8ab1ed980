#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "flrpoi/error.hpp"
#include "flrpoi/report_io.hpp"
#include "flrpoi/study_config.hpp"
#include "json.hpp"

using namespace flrpoi;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

FitResult small_fit(Variant v, bool se) {
  auto spec = DgpSpec::easy();
  spec.n = 80;
  spec.p = 41;
  const Eigen::MatrixXd x = gen_brownian(80, 41, 5);
  const FunctionalDataset ds(x, gen_response(x, spec, 6));
  SelectorConfig cfg;
  cfg.variant = v;
  cfg.standard_errors = se;
  return run_variant(ds, cfg);
}

}  // namespace

TEST_CASE("minimal study config takes the defaults") {
  const auto cfg = parse_study_config("dgp = \"easy\"\n");
  CHECK(cfg.dgp.name == DgpName::Easy);
  CHECK(cfg.dgp.n == 250);
  CHECK(cfg.dgp.p == 300);
  CHECK(cfg.replications == 200);
  CHECK(cfg.estimators == std::vector<Variant>{Variant::PesEs});
  CHECK(cfg.selector.delta_grid.empty());
}

TEST_CASE("full study config") {
  const auto cfg = parse_study_config(R"(
dgp = "complicated"
n = 120
p = 61
sigma_eps = 0.5
estimators = ["pes-es", "kps", "cks"]
replications = 10
seed = 42
threads = 2
standardize_preselect = false
max_candidates = 8
kps_max_components = 20
delta_grid = [0.05, 0.1]

[rho_grid]
min = 1e-4
max = 10.0
points = 5
refine = false
)");
  CHECK(cfg.dgp.name == DgpName::Complicated);
  CHECK(cfg.dgp.n == 120);
  CHECK(cfg.dgp.p == 61);
  CHECK(cfg.dgp.sigma_eps == 0.5);
  CHECK_FALSE(cfg.dgp.standardize_preselect);
  CHECK(cfg.estimators == std::vector<Variant>{Variant::PesEs, Variant::Kps, Variant::Cks});
  CHECK(cfg.replications == 10);
  CHECK(cfg.seed == 42);
  CHECK(cfg.threads == 2);
  CHECK(*cfg.selector.max_candidates == 8);
  CHECK(cfg.selector.kps_max_components == 20);
  CHECK(cfg.selector.delta_grid == std::vector<double>{0.05, 0.1});
  CHECK(cfg.selector.rho_grid.min == 1e-4);
  CHECK(cfg.selector.rho_grid.points == 5);
  CHECK_FALSE(cfg.selector.rho_grid.refine);
}

TEST_CASE("delta grid as a table") {
  const auto cfg = parse_study_config("dgp = \"easy\"\np = 101\n[delta_grid]\ncount = 4\nmin = 0.02\nmax = 0.08\n");
  CHECK(cfg.selector.delta_grid == log_delta_grid(101, 4, 0.02, 0.08));
}

TEST_CASE("custom dgp") {
  const auto cfg = parse_study_config(R"(
dgp = "custom"
[custom]
beta_poly = [1.0, 0.0, 2.0]
taus = [0.5]
betas = [4.0]
)");
  CHECK(cfg.dgp.name == DgpName::Custom);
  CHECK(cfg.dgp.beta(0.5) == doctest::Approx(1.5));
  CHECK(cfg.dgp.taus == std::vector<double>{0.5});
  CHECK(cfg.dgp.betas == std::vector<double>{4.0});
}

TEST_CASE("config errors") {
  CHECK(kind_of([] { (void)parse_study_config("n = 10\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\nbogus = 1\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\nn = 1\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\nn = \"ten\"\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\nestimators = [\"ols\"]\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"custom\"\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\n[custom]\ntaus = [0.5]\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"custom\"\n[custom]\ntaus = [0.5]\nbetas = []\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_study_config("dgp = \"easy\"\n[rho_grid]\nsteps = 3\n"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)load_study_config("/nonexistent/flrpoi.toml"); }) == ErrorKind::ConfigError);
}

TEST_CASE("malformed toml reports the line") {
  try {
    (void)parse_study_config("dgp = \"easy\"\nn = = 3\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("fit json round trip") {
  for (auto v : {Variant::PesEs, Variant::Cks, Variant::Kps}) {
    const auto fit = small_fit(v, v != Variant::Kps);
    const Grid grid(41);
    const auto text = fit_to_json(fit, grid);
    const auto back = fit_from_json(text);
    CHECK(back.variant == fit.variant);
    CHECK(back.estimate.beta_grid == fit.estimate.beta_grid);
    CHECK(back.poi_indices() == fit.poi_indices());
    CHECK(back.delta == fit.delta);
    CHECK(back.components == fit.components);
    CHECK(back.preselected == fit.preselected);
    CHECK(back.trace.size() == fit.trace.size());
    CHECK(fit_to_json(back, grid) == text);
  }
}

TEST_CASE("non-finite values are written as null") {
  const auto fit = small_fit(Variant::Kps, false);
  const auto j = nlohmann::json::parse(fit_to_json(fit, Grid(41)));
  CHECK(j.at("rho").is_null());
  CHECK(j.at("gcv").is_null());
  CHECK(j.at("components").is_number_integer());
  const auto cks = nlohmann::json::parse(fit_to_json(small_fit(Variant::Cks, false), Grid(41)));
  CHECK(cks.at("delta").is_null());
  CHECK(cks.at("pois").empty());
}

TEST_CASE("fit json parse errors") {
  CHECK(kind_of([] { (void)fit_from_json("{"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { (void)fit_from_json("{\"estimator\": \"pes\"}"); }) == ErrorKind::ParseError);
}

TEST_CASE("fit csv layout") {
  const auto fit = small_fit(Variant::PesEs, false);
  std::istringstream in(fit_to_csv(fit, Grid(41)));
  std::string line;
  std::getline(in, line);
  CHECK(line == "kind,index,location,value");
  std::size_t beta = 0, poi = 0;
  while (std::getline(in, line)) {
    if (line.rfind("beta,", 0) == 0) ++beta;
    if (line.rfind("poi,", 0) == 0) ++poi;
  }
  CHECK(beta == 41);
  CHECK(poi == fit.pois.size());
}

TEST_CASE("study report json and csv") {
  auto spec = DgpSpec::easy();
  spec.n = 50;
  spec.p = 31;
  StudyOptions opt;
  opt.replications = 3;
  const auto rep = run_study(spec, {Variant::PesEs, Variant::Cks}, opt);
  const auto text = study_to_json(rep);
  const auto back = study_from_json(text);
  CHECK(study_to_json(back) == text);
  CHECK(back.estimators.size() == 2);
  CHECK(back.estimators[0].bias2_beta == rep.estimators[0].bias2_beta);

  std::istringstream in(study_to_csv(rep));
  std::string line;
  std::getline(in, line);
  CHECK(line == "estimator,dgp,n,p,detect_pct,bias2_beta,var_beta,bias2_pois,var_pois");
  std::getline(in, line);
  CHECK(line.rfind("pes-es,easy,50,31,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("cks,easy,50,31,0,", 0) == 0);
  CHECK(line.substr(line.size() - 2) == ",,");
}

TEST_CASE("kappa json verdict") {
  const DeltaSpec spec(0.1, 41);
  const auto smooth = nlohmann::json::parse(kappa_to_json({2.3, 1.0, 0.2}, spec));
  CHECK(smooth.at("verdict").is_null());
  CHECK(smooth.at("k_delta") == 4);
  const auto rough = nlohmann::json::parse(kappa_to_json({1.0, 1.0, 0.5}, spec));
  CHECK(rough.at("verdict") == "identifiable");
}
