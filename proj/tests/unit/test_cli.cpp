#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "flrpoi/funspace.hpp"
#include "flrpoi/simlab.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = flrpoi::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "flrpoi_cli_test";
  fs::create_directories(dir);
  return dir;
}

// Easy-model data on 41 grid points.
void write_dataset(const fs::path& x, const fs::path& y) {
  auto spec = flrpoi::DgpSpec::easy();
  spec.n = 80;
  spec.p = 41;
  const Eigen::MatrixXd m = flrpoi::gen_brownian(80, 41, 3);
  flrpoi::write_csv(flrpoi::FunctionalDataset(m, flrpoi::gen_response(m, spec, 4)), x, y);
}

}  // namespace

TEST_CASE("cli fit writes json") {
  const auto dir = scratch();
  write_dataset(dir / "x.csv", dir / "y.csv");
  const auto r = run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "y.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("estimator") == "pes-es");
  CHECK(j.at("beta_grid").size() == 41);
}

TEST_CASE("cli cks has no points of impact") {
  const auto dir = scratch();
  write_dataset(dir / "x.csv", dir / "y.csv");
  const auto r = run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "y.csv").string(), "--estimator", "cks"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).at("pois").empty());
}

TEST_CASE("cli fit csv output and penalty dump") {
  const auto dir = scratch();
  write_dataset(dir / "x.csv", dir / "y.csv");
  const auto pen = dir / "pen";
  const auto r = run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "y.csv").string(), "--format", "csv",
                      "--delta-grid", "0.05,0.1", "--dump-penalty", pen.string(), "--out", (dir / "fit.csv").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "fit.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "kind,index,location,value");
  for (const char* name : {"projection.csv", "curvature.csv", "combined.csv"}) {
    REQUIRE(fs::exists(pen / name));
    CHECK(flrpoi::read_csv_matrix(pen / name).rows() == 41);
  }
}

TEST_CASE("cli input errors exit with code 2") {
  const auto dir = scratch();
  write_dataset(dir / "x.csv", dir / "y.csv");
  CHECK(run({"fit", "--x", (dir / "x.csv").string()}).code == 2);
  CHECK(run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "missing.csv").string()}).code == 2);
  const auto bad = run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "y.csv").string(), "--estimator", "ols"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("unknown estimator") != std::string::npos);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({}).code == 2);

  std::ofstream(dir / "short_y.csv") << "1\n2\n";
  CHECK(run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "short_y.csv").string()}).code == 2);
}

TEST_CASE("cli help exits cleanly") {
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli kappa") {
  const auto dir = scratch();
  flrpoi::write_csv(flrpoi::gen_brownian(200, 101, 5), dir / "bm.csv");
  const auto ok = run({"kappa", "--x", (dir / "bm.csv").string(), "--delta", "0.04"});
  REQUIRE(ok.code == 0);
  const auto j = nlohmann::json::parse(ok.out);
  CHECK(j.at("k_delta") == 4);
  CHECK(j.at("kappa").get<double>() > 0.5);
  CHECK(j.at("kappa").get<double>() < 1.5);
  CHECK(j.at("verdict") == "identifiable");
  CHECK(run({"kappa", "--x", (dir / "bm.csv").string(), "--delta", "0.03"}).code == 2);
}

TEST_CASE("cli simulate csv") {
  const auto dir = scratch();
  std::ofstream(dir / "study.toml") << "dgp = \"easy\"\nn = 40\np = 31\nreplications = 3\nestimators = [\"cks\"]\n";
  const auto r = run({"simulate", "--config", (dir / "study.toml").string(), "--format", "csv", "--estimator",
                      "pes-es,cks", "--threads", "1"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "estimator,dgp,n,p,detect_pct,bias2_beta,var_beta,bias2_pois,var_pois");
  std::getline(in, line);
  CHECK(line.rfind("pes-es,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("cks,", 0) == 0);
}

TEST_CASE("cli simulate config errors exit with code 2") {
  const auto dir = scratch();
  std::ofstream(dir / "bad.toml") << "dgp = \"easy\"\nwhatever = 3\n";
  const auto r = run({"simulate", "--config", (dir / "bad.toml").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("whatever") != std::string::npos);
  CHECK(run({"simulate", "--config", (dir / "none.toml").string()}).code == 2);
}
