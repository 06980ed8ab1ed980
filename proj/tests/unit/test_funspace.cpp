#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "flrpoi/error.hpp"
#include "flrpoi/funspace.hpp"

using namespace flrpoi;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("flrpoi_funspace_" + name);
  std::ofstream(path) << text;
  return path;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = 3.0 * z(gen) + static_cast<double>(j);
  return m;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("grid is equidistant on the unit interval") {
  for (std::size_t p : {5u, 7u, 300u, 501u}) {
    const Grid g(p);
    CHECK(g[0] == 0.0);
    CHECK(g[p - 1] == 1.0);
    for (std::size_t j = 0; j + 1 < p; ++j) CHECK(std::abs(g[j + 1] - g[j] - g.step()) < 1e-12);
  }
  CHECK(kind_of([] { Grid g(4); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("nearest grid index") {
  const Grid g(11);
  CHECK(g.nearest_index(0.0) == 0);
  CHECK(g.nearest_index(0.31) == 3);
  CHECK(g.nearest_index(1.0) == 10);
}

TEST_CASE("center subtracts means") {
  Eigen::MatrixXd x(2, 5);
  x << 0, 2, 0, 0, 0, 4, 6, 0, 0, 0;
  const FunctionalDataset ds(x, Eigen::Vector2d(1, 3));
  const auto c = center(ds);
  CHECK(c.yc(0) == -1.0);
  CHECK(c.yc(1) == 1.0);
  CHECK(c.xc(0, 0) == -2.0);
  CHECK(c.xc(0, 1) == -2.0);
  CHECK(c.xc(1, 0) == 2.0);
  CHECK(c.xc(1, 1) == 2.0);
  CHECK(c.y_mean == 2.0);
}

TEST_CASE("centered columns have zero mean by direct summation") {
  const Eigen::MatrixXd x = random_matrix(5, 6, 11);
  const Eigen::VectorXd y = random_matrix(5, 1, 12).col(0);
  const auto c = center(FunctionalDataset(x, y));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) s += c.xc(i, j);
    CHECK(std::abs(s / 5.0) < 1e-12);
  }
}

TEST_CASE("center is idempotent") {
  const auto c = center(FunctionalDataset(random_matrix(9, 8, 3), random_matrix(9, 1, 4).col(0)));
  const auto cc = center(FunctionalDataset(c.xc, c.yc));
  CHECK((cc.xc - c.xc).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cc.yc - c.yc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize uses the 1/n divisor") {
  Eigen::MatrixXd x(2, 5);
  x << -2, 1, 0, 0, 5, 2, 3, 0, 0, 5;
  const auto c = center(FunctionalDataset(x, Eigen::Vector2d(0, 1)));
  const auto s = standardize(c);
  CHECK(s.x_sds(0) == doctest::Approx(2.0));
  CHECK(s.xst(0, 0) == doctest::Approx(-1.0));
  CHECK(s.xst(1, 0) == doctest::Approx(1.0));
  CHECK(s.x_sds(2) == 0.0);
  CHECK(s.xst.col(2).isZero());
  CHECK(s.xst.col(4).isZero());
}

TEST_CASE("standardized columns have unit sd") {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> nd(3, 50), pd(5, 40);
  for (int rep = 0; rep < 20; ++rep) {
    const auto n = nd(gen);
    const auto p = pd(gen);
    Eigen::MatrixXd x = random_matrix(n, p, 100 + rep);
    x.col(0).setZero();
    const auto s = standardize(center(FunctionalDataset(x, random_matrix(n, 1, 200 + rep).col(0))));
    CHECK(s.xst.col(0).isZero());
    for (Eigen::Index j = 1; j < p; ++j) {
      const double sd = std::sqrt(s.xst.col(j).squaredNorm() / n);
      CHECK(std::abs(sd - 1.0) < 1e-8);
    }
    CHECK(std::abs(std::sqrt(s.yst.squaredNorm() / n) - 1.0) < 1e-8);
  }
}

TEST_CASE("standard normal column standardizes to sd one") {
  const Eigen::MatrixXd x = random_matrix(100, 5, 21);
  const auto s = standardize(center(FunctionalDataset(x, x.col(1))));
  const Eigen::VectorXd col = s.xst.col(3);
  const double mean = col.mean();
  CHECK(std::abs(std::sqrt((col.array() - mean).square().mean()) - 1.0) < 1e-10);
}

TEST_CASE("constant response is degenerate") {
  const auto c = center(FunctionalDataset(random_matrix(6, 5, 1), Eigen::VectorXd::Constant(6, 2.5)));
  CHECK(kind_of([&] { (void)standardize(c); }) == ErrorKind::DegenerateResponse);
}

TEST_CASE("default sd floor scales with the data") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 5);
  x(0, 1) = 500.0;
  const auto c = center(FunctionalDataset(x, Eigen::Vector2d(0, 1)));
  CHECK(default_sd_floor(c) == doctest::Approx(250.0 * 1e-10));
}

TEST_CASE("dataset shape errors") {
  CHECK(kind_of([] { FunctionalDataset(Eigen::MatrixXd::Zero(3, 5), Eigen::VectorXd::Zero(2)); }) ==
        ErrorKind::ShapeMismatch);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 5);
  bad(1, 1) = std::nan("");
  CHECK(kind_of([&] { FunctionalDataset(bad, Eigen::VectorXd::Zero(3)); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("load_csv infers the grid") {
  const auto px = temp_file("x.csv", "1,2,3,4,5\n2,3,4,5,6\n0,0,1,0,0\n");
  const auto py = temp_file("y.csv", "1\n2\n3\n");
  const auto ds = load_csv(px, py);
  CHECK(ds.n() == 3);
  CHECK(ds.p() == 5);
  CHECK(ds.grid()[1] == doctest::Approx(0.25));
  CHECK(ds.x()(2, 2) == 1.0);
}

TEST_CASE("load_csv honours a header row") {
  const auto px = temp_file("xh.csv", "a,b,c,d,e\n1,2,3,4,5\n2,3,4,5,6\n");
  const auto py = temp_file("yh.csv", "y\n1\n2\n");
  const auto ds = load_csv(px, py, CsvOptions{true});
  CHECK(ds.n() == 2);
  CHECK(ds.x()(0, 0) == 1.0);
}

TEST_CASE("ragged rows are a parse error naming the row") {
  const auto px = temp_file("ragged.csv", "1,2,3,4,5\n1,2,3\n");
  try {
    (void)read_csv_matrix(px);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("non-numeric cells are a parse error") {
  const auto px = temp_file("nonnum.csv", "1,2,x,4,5\n");
  CHECK(kind_of([&] { (void)read_csv_matrix(px); }) == ErrorKind::ParseError);
}

TEST_CASE("row count mismatch between files") {
  const auto px = temp_file("xm.csv", "1,2,3,4,5\n2,3,4,5,6\n");
  const auto py = temp_file("ym.csv", "1\n2\n3\n");
  CHECK(kind_of([&] { (void)load_csv(px, py); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("csv round trip keeps twelve significant digits") {
  const Eigen::MatrixXd x = random_matrix(7, 9, 8) * 1e-3;
  const Eigen::VectorXd y = random_matrix(7, 1, 9).col(0) * 1e5;
  const auto dir = std::filesystem::temp_directory_path();
  write_csv(FunctionalDataset(x, y), dir / "flrpoi_rt_x.csv", dir / "flrpoi_rt_y.csv");
  const auto back = load_csv(dir / "flrpoi_rt_x.csv", dir / "flrpoi_rt_y.csv");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      CHECK(std::abs(back.x()(i, j) - x(i, j)) <= 1e-12 * std::abs(x(i, j)));
    CHECK(std::abs(back.y()(i) - y(i)) <= 1e-12 * std::abs(y(i)));
  }
}
