#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gravimetric/glm.hpp"
#include "gravimetric/oracle.hpp"
#include "gravimetric/synth.hpp"
#include "../support.hpp"

#include <cmath>

using namespace gravimetric;
using namespace gravimetric::synth;
using support::thrown_code;

namespace {

double rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("grid oracle: closed-form instances") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  auto b = oracle_mle_grid(support::design(X, Eigen::Vector3d(1, 2, 3)), {{-2.0, 3.0}}, 0.1, 3);
  CHECK(std::abs(b[0] - std::log(2.0)) < 1e-3);

  Eigen::MatrixXd X2(6, 2);
  X2 << 1, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1;
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 5, 6, 7;
  auto g = oracle_mle_grid(support::design(X2, y), {{-2.0, 3.0}, {-2.0, 3.0}}, 0.1, 3);
  CHECK(std::abs(g[0] - std::log(2.0)) < 1e-3);
  CHECK(std::abs(g[1] - std::log(3.0)) < 1e-3);
}

TEST_CASE("grid oracle agrees with ppml on a one-regressor draw") {
  SimulationSpec s;
  s.n = 200;
  s.seed = 7;
  s.beta = {0.5, 0.3};
  auto d = simulate_design(s);
  auto fit = fit_ppml(d);
  auto o = oracle_mle_grid(d, {{-1.0, 2.0}, {-1.0, 2.0}}, 0.05, 3);
  CHECK((fit.coefficients - o).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("grid oracle refuses a maximum on the box edge") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  CHECK(thrown_code([&] { oracle_mle_grid(support::design(X, Eigen::Vector3d(1, 2, 3)), {{-2.0, 0.2}}, 0.1, 2); }) ==
        ErrorCode::BoundaryMaximum);
}

TEST_CASE("gauss-jordan inverse") {
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  CHECK(((oracle_inverse(a) * a) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::Matrix2d s;
  s << 1, 2, 2, 4;
  CHECK(thrown_code([&] { oracle_inverse(s); }) == ErrorCode::SingularBread);
}

TEST_CASE("sandwich: glm matches the oracle on toy instances") {
  SUBCASE("poisson") {
    SimulationSpec s;
    s.n = 80;
    s.n_clusters = 9;
    s.seed = 31;
    s.beta = {1.0, 0.4, -0.2};
    auto d = simulate_design(s);
    auto f = fit_ppml(d);
    CHECK(rel_gap(cluster_robust_cov(f, d), oracle_sandwich(d, f.coefficients, OracleFamily::Poisson)) <= 1e-10);
  }
  SUBCASE("gaussian on logs") {
    SimulationSpec s;
    s.n = 60;
    s.n_clusters = 5;
    s.seed = 32;
    s.beta = {-1.0, 0.8};
    s.family = {Family::LogNormal, 0, 0.4};
    auto d = simulate_design(s);
    auto f = fit_ols(d);
    CHECK(rel_gap(cluster_robust_cov(f, d), oracle_sandwich(d, f.coefficients, OracleFamily::Gaussian)) <= 1e-10);
  }
  SUBCASE("binary regressor, two clusters") {
    SimulationSpec s;
    s.n = 40;
    s.n_clusters = 2;
    s.seed = 33;
    s.beta = {0.7, 0.5};
    s.binary_regressors = true;
    auto d = simulate_design(s);
    auto f = fit_ppml(d);
    CHECK(rel_gap(cluster_robust_cov(f, d), oracle_sandwich(d, f.coefficients, OracleFamily::Poisson)) <= 1e-10);
  }
}

TEST_CASE("oracle sandwich needs two clusters") {
  SimulationSpec s;
  s.n = 10;
  s.n_clusters = 1;
  auto d = simulate_design(s);
  CHECK(thrown_code([&] { oracle_sandwich(d, Eigen::Vector2d(0.5, 0.3), OracleFamily::Poisson); }) ==
        ErrorCode::InsufficientData);
}
