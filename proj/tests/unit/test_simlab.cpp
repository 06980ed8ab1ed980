#include <cmath>

#include "doctest.h"
#include "flrpoi/error.hpp"
#include "flrpoi/simlab.hpp"

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

}  // namespace

TEST_CASE("named data generating processes") {
  const auto easy = DgpSpec::easy();
  CHECK(easy.beta(0.0) == doctest::Approx(1.0));
  CHECK(easy.beta(1.0) == doctest::Approx(2.0));
  CHECK(easy.taus == std::vector<double>{0.3, 0.6});
  CHECK(easy.betas == std::vector<double>{-3.0, 3.0});

  const auto comp = DgpSpec::complicated();
  CHECK(comp.beta(0.5) == doctest::Approx(0.5));
  CHECK(comp.beta(0.0) == doctest::Approx(5.0 * 0.125 + 1.0));
  CHECK(comp.taus == std::vector<double>{0.3, 0.4, 0.6});
  CHECK(comp.betas == std::vector<double>{-3.0, 3.0, 3.0});

  const auto only = DgpSpec::only_poi();
  CHECK(only.beta(0.4) == 0.0);
  CHECK(only.taus == easy.taus);

  const auto none = DgpSpec::no_poi();
  CHECK(none.taus.empty());
  CHECK(none.beta(0.25) == doctest::Approx(easy.beta(0.25)));
}

TEST_CASE("dgp names parse case-insensitively") {
  CHECK(parse_dgp_name("Easy") == DgpName::Easy);
  CHECK(parse_dgp_name("COMPLICATED") == DgpName::Complicated);
  CHECK(parse_dgp_name("onlypoi") == DgpName::OnlyPoI);
  CHECK(parse_dgp_name("nopoi") == DgpName::NoPoI);
  for (auto d : {DgpName::Easy, DgpName::Complicated, DgpName::OnlyPoI, DgpName::NoPoI})
    CHECK(parse_dgp_name(to_string(d)) == d);
  CHECK(kind_of([] { (void)parse_dgp_name("medium"); }) == ErrorKind::ConfigError);
}

TEST_CASE("dgp validation") {
  auto s = DgpSpec::easy();
  s.betas.pop_back();
  CHECK_THROWS_AS(s.validate(), Error);
  s = DgpSpec::easy();
  s.taus = {0.3, 1.0};
  CHECK_THROWS_AS(s.validate(), Error);
  s = DgpSpec::easy();
  s.taus = {0.3, 0.3};
  CHECK_THROWS_AS(s.validate(), Error);
  s = DgpSpec::easy();
  s.sigma_eps = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = DgpSpec::easy();
  s.p = 4;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("brownian paths start at zero with the right increment variance") {
  const Eigen::MatrixXd x = gen_brownian(400, 101, 3);
  CHECK(x.col(0).isZero());
  const Eigen::MatrixXd inc = x.rightCols(100) - x.leftCols(100);
  const double var = inc.squaredNorm() / static_cast<double>(inc.size());
  CHECK(var == doctest::Approx(0.01).epsilon(0.03));
  CHECK(gen_brownian(3, 11, 5) == gen_brownian(3, 11, 5));
  CHECK_FALSE(gen_brownian(3, 11, 5) == gen_brownian(3, 11, 6));
}

TEST_CASE("noiseless response follows the model") {
  auto spec = DgpSpec::easy();
  spec.sigma_eps = 0.0;
  spec.p = 11;
  const Eigen::MatrixXd x = gen_brownian(4, 11, 7);
  const Eigen::VectorXd y = gen_response(x, spec, 8);
  for (Eigen::Index i = 0; i < 4; ++i) {
    double expected = 0.0;
    for (int j = 0; j < 11; ++j) expected += spec.beta(j / 10.0) * x(i, j) / 11.0;
    expected += -3.0 * x(i, 3) + 3.0 * x(i, 6);
    CHECK(y(i) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("tau snapping") {
  const Grid g(300);
  const auto idx = snap_taus({0.3, 0.6}, g, false);
  CHECK(idx == std::vector<std::size_t>{90, 179});
  CHECK(kind_of([&] { (void)snap_taus({0.3}, g, true); }) == ErrorKind::TauOffGrid);
  CHECK(snap_taus({0.3, 0.6}, Grid(11), true) == std::vector<std::size_t>{3, 6});
}

TEST_CASE("detection check") {
  const auto d = detection_check({0.305, 0.595, 0.8}, {0.3, 0.6});
  CHECK(d.all);
  CHECK(*d.match[0] == 0);
  CHECK(*d.match[1] == 1);

  const auto miss = detection_check({0.31}, {0.3});
  CHECK_FALSE(miss.all);
  CHECK_FALSE(miss.match[0].has_value());

  const auto shared = detection_check({0.305}, {0.3, 0.306});
  CHECK(shared.found[0]);
  CHECK_FALSE(shared.found[1]);

  CHECK(detection_check({}, {}).all);
}

TEST_CASE("seed derivation is deterministic and spreads") {
  CHECK(replication_seed(1, 0) == replication_seed(1, 0));
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(replication_seed(1, 0) != replication_seed(2, 0));
}

TEST_CASE("study report does not depend on the thread count") {
  auto spec = DgpSpec::easy();
  spec.n = 60;
  spec.p = 41;
  StudyOptions opt;
  opt.replications = 6;
  opt.seed = 11;
  opt.threads = 1;
  const auto a = run_study(spec, {Variant::PesEs, Variant::Cks}, opt);
  opt.threads = 3;
  const auto b = run_study(spec, {Variant::PesEs, Variant::Cks}, opt);
  REQUIRE(a.estimators.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(a.estimators[e].bias2_beta == b.estimators[e].bias2_beta);
    CHECK(a.estimators[e].var_beta == b.estimators[e].var_beta);
    CHECK(a.estimators[e].detect_pct == b.estimators[e].detect_pct);
    CHECK(a.estimators[e].bias2_pois == b.estimators[e].bias2_pois);
  }
  CHECK_FALSE(a.estimators[1].bias2_pois.has_value());
  CHECK(*a.estimators[1].detect_pct == 0.0);
}

TEST_CASE("bias and variance match the stored curves") {
  auto spec = DgpSpec::no_poi();
  spec.n = 50;
  spec.p = 31;
  std::vector<std::vector<Eigen::VectorXd>> curves;
  StudyOptions opt;
  opt.replications = 5;
  opt.seed = 3;
  opt.curves = &curves;
  const auto rep = run_study(spec, {Variant::Cks}, opt);
  REQUIRE(curves.size() == 1);
  REQUIRE(curves[0].size() == 5);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(31);
  for (const auto& c : curves[0]) mean += c / 5.0;
  double var = 0.0;
  for (const auto& c : curves[0]) var += (c - mean).squaredNorm() / 5.0 / 31.0;
  const Grid g(31);
  Eigen::VectorXd truth(31);
  for (std::size_t j = 0; j < 31; ++j) truth(static_cast<Eigen::Index>(j)) = spec.beta(g[j]);
  const auto& s = rep.estimators[0];
  CHECK(s.replications == 5);
  CHECK(s.bias2_beta == doctest::Approx((mean - truth).squaredNorm() / 31.0).epsilon(1e-10));
  CHECK(s.var_beta == doctest::Approx(var).epsilon(1e-10));
  CHECK_FALSE(s.detect_pct.has_value());
}

TEST_CASE("study argument checks") {
  StudyOptions opt;
  opt.replications = 1;
  CHECK_THROWS_AS(run_study(DgpSpec::easy(), {Variant::Cks}, opt), Error);
  opt.replications = 2;
  CHECK_THROWS_AS(run_study(DgpSpec::easy(), {}, opt), Error);
}
