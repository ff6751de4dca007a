#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wfr/dgp.hpp"
#include "wfr/rng.hpp"

#include <cmath>
#include <string>

using namespace wfr;

namespace {

DgpConfig base_config() {
  DgpConfig cfg;
  cfg.N = 50;
  cfg.T = 50;
  cfg.r = 2;
  cfg.p = 2;
  cfg.alpha = VectorXd(2);
  cfg.alpha << 1.0, 1.0;
  cfg.d = VectorXd(2);
  cfg.d << 0.2, 0.05;
  cfg.H = MatrixXd(2, 2);
  cfg.H << 1.0, 0.5, 0.5, 2.0;
  cfg.rho_e = 0.2;
  cfg.sigma_e = 0.5;
  cfg.theta = 0.5;
  cfg.s_order = 2;
  cfg.rho_fw = 0.0;
  cfg.sigma_w = 1.0;
  cfg.sigma_eps = std::sqrt(0.5);
  cfg.gamma0 = VectorXd::Ones(2);
  cfg.beta = VectorXd::Ones(2);
  cfg.seed = 314;
  return cfg;
}

std::string thrown_message(const DgpConfig& cfg) {
  try {
    cfg.validate();
  } catch (const validation_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("spatial correlation matches a direct loop construction") {
  const int N = 7, s = 2;
  const double theta = 0.5;
  // Independent construction with scalar loops only.
  double S[7][7] = {};
  for (int i = 0; i < N; ++i) {
    int cnt = 0;
    for (int j = 0; j < N; ++j)
      if (j != i && std::abs(i - j) <= s) ++cnt;
    for (int j = 0; j < N; ++j)
      if (j != i && std::abs(i - j) <= s) S[i][j] = 1.0 / cnt;
  }
  double A[7][7] = {};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) A[i][j] = (i == j ? 1.0 : 0.0) - theta * S[i][j];
  double M[7][7] = {};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) M[i][j] += A[i][k] * A[j][k];
  const MatrixXd R = build_spatial_corr(N, s, theta);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      CHECK(R(i, j) == doctest::Approx(M[i][j] / std::sqrt(M[i][i] * M[j][j])).epsilon(1e-12));
}

TEST_CASE("spatial correlation is a correlation matrix") {
  for (int N : {2, 5, 20, 50}) {
    const MatrixXd R = build_spatial_corr(N, 2, 0.5);
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < N; ++i) CHECK(R(i, i) == 1.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(R.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("sym_sqrt squares back to the input") {
  std::mt19937_64 rng = make_stream(99);
  std::normal_distribution<double> stdnorm;
  MatrixXd A(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) A(i, j) = stdnorm(rng);
  MatrixXd spd = A * A.transpose() + MatrixXd::Identity(6, 6);
  const MatrixXd root = sym_sqrt(spd);
  CHECK((root - root.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((root * root - spd).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factor structure satisfies its normalizations") {
  DgpConfig cfg = base_config();
  std::mt19937_64 rng = make_stream(cfg.seed, 0);
  const FactorStructure fs = gen_factor_structure(cfg, rng);
  const int T = cfg.T;

  const MatrixXd gram_F = fs.F0.transpose() * fs.F0 / double(T);
  CHECK((gram_F - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

  const MatrixXd gram_B = fs.B0.transpose() * fs.B0;
  CHECK(std::abs(gram_B(0, 1)) < 1e-10);
  CHECK(gram_B(0, 0) == doctest::Approx(cfg.d(0) * cfg.N).epsilon(1e-10));
  CHECK(gram_B(1, 1) == doctest::Approx(cfg.d(1) * cfg.N).epsilon(1e-10));
  CHECK(gram_B(0, 0) > gram_B(1, 1));

  // Rotated pair reproduces the same common component.
  CHECK((fs.Fstar * cfg.H - fs.F0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fs.Fstar * fs.Bstar.transpose() - fs.F0 * fs.B0.transpose()).cwiseAbs().maxCoeff() <
        1e-10);

  // Sign convention: the largest-|entry| element of each factor is positive.
  for (int k = 0; k < 2; ++k) {
    int imax = 0;
    fs.F0.col(k).cwiseAbs().maxCoeff(&imax);
    CHECK(fs.F0(imax, k) > 0.0);
  }
}

TEST_CASE("error panel has the configured AR(1) autocorrelation") {
  DgpConfig cfg = base_config();
  cfg.T = 20000;
  cfg.N = 4;
  const MatrixXd R = build_spatial_corr(cfg.N, cfg.s_order, cfg.theta);
  const MatrixXd half = sym_sqrt(cfg.sigma_e * cfg.sigma_e * R);
  std::mt19937_64 rng = make_stream(7);
  const MatrixXd E = gen_errors(cfg, half, rng);

  const VectorXd col = E.col(0);
  const double mean = col.mean();
  double num = 0, den = 0;
  for (int t = 1; t < cfg.T; ++t) num += (col(t) - mean) * (col(t - 1) - mean);
  for (int t = 0; t < cfg.T; ++t) den += (col(t) - mean) * (col(t) - mean);
  CHECK(num / den == doctest::Approx(cfg.rho_e).epsilon(0.15));

  // Stationary marginal variance sigma_e^2 (burn-in from e_1 ~ N(0, I)
  // washes out over a long sample).
  CHECK(den / cfg.T == doctest::Approx(cfg.sigma_e * cfg.sigma_e).epsilon(0.1));
}

TEST_CASE("regressors carry the configured factor correlation") {
  DgpConfig cfg = base_config();
  cfg.T = 20000;
  cfg.rho_fw = 0.6;
  std::mt19937_64 rng = make_stream(11);
  const FactorStructure fs = gen_factor_structure(cfg, rng);
  const RegressionPart reg = gen_regression(cfg, fs.F0, rng);

  CHECK((reg.W.col(cfg.p - 1) - VectorXd::Ones(cfg.T)).cwiseAbs().maxCoeff() == 0.0);

  const VectorXd fbar = fs.F0 * VectorXd::Constant(cfg.r, 1.0 / std::sqrt(double(cfg.r)));
  const VectorXd w = reg.W.col(0);
  const double mw = w.mean(), mf = fbar.mean();
  double swf = 0, sww = 0, sff = 0;
  for (int t = 0; t < cfg.T; ++t) {
    swf += (w(t) - mw) * (fbar(t) - mf);
    sww += (w(t) - mw) * (w(t) - mw);
    sff += (fbar(t) - mf) * (fbar(t) - mf);
  }
  CHECK(swf / std::sqrt(sww * sff) == doctest::Approx(0.6).epsilon(0.04));
}

TEST_CASE("simulated dataset assembles exactly from its ground truth") {
  const DgpConfig cfg = base_config();
  const Dataset ds = simulate(cfg);
  REQUIRE(ds.truth.has_value());
  const GroundTruth& g = *ds.truth;

  CHECK((ds.X - (g.F0 * g.B0.transpose() + g.E)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((ds.y - (g.F0 * g.gamma0 + ds.W * g.beta + g.eps)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((g.gamma_star - cfg.H * cfg.gamma0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.Lambda - cfg.lambda()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate is a pure function of the config") {
  const DgpConfig cfg = base_config();
  const Dataset a = simulate(cfg);
  const Dataset b = simulate(cfg);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.W - b.W).cwiseAbs().maxCoeff() == 0.0);

  DgpConfig other = cfg;
  other.seed = cfg.seed + 1;
  const Dataset c = simulate(other);
  CHECK((a.X - c.X).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("validation names the offending field") {
  DgpConfig cfg = base_config();
  cfg.alpha(0) = 1.5;
  CHECK(thrown_message(cfg).find("alpha") != std::string::npos);

  cfg = base_config();
  cfg.alpha << 0.6, 0.8;  // increasing
  CHECK(thrown_message(cfg).find("alpha") != std::string::npos);

  // Ordered alpha but crossing d: lambda must still end up decreasing.
  cfg = base_config();
  cfg.alpha << 1.0, 1.0;
  cfg.d << 0.05, 0.2;
  CHECK(thrown_message(cfg).find("lambda") != std::string::npos);

  cfg = base_config();
  cfg.d(1) = -0.1;
  CHECK(thrown_message(cfg).find("d entries") != std::string::npos);

  cfg = base_config();
  cfg.rho_e = 1.0;
  CHECK(thrown_message(cfg).find("rho_e") != std::string::npos);

  cfg = base_config();
  cfg.H << 1.0, 2.0, 0.5, 1.0;  // singular
  CHECK(thrown_message(cfg).find("H") != std::string::npos);

  cfg = base_config();
  cfg.gamma0 = VectorXd::Ones(3);
  CHECK(thrown_message(cfg).find("gamma0") != std::string::npos);

  CHECK_NOTHROW(base_config().validate());
}

TEST_CASE("noise-free configuration is allowed and exact") {
  DgpConfig cfg = base_config();
  cfg.sigma_e = 0.0;
  cfg.sigma_eps = 0.0;
  cfg.rho_e = 0.0;
  const Dataset ds = simulate(cfg);

  CHECK(ds.truth->eps.cwiseAbs().maxCoeff() == 0.0);
  const VectorXd y0 = ds.truth->F0 * cfg.gamma0 + ds.W * cfg.beta + ds.truth->eps;
  CHECK((ds.y - y0).cwiseAbs().maxCoeff() == 0.0);

  // The initial error row stays standard normal by construction; with
  // sigma_e = 0 and rho_e = 0 every later row is exactly zero.
  CHECK(ds.truth->E.row(0).cwiseAbs().maxCoeff() > 0.1);
  CHECK(ds.truth->E.bottomRows(cfg.T - 1).cwiseAbs().maxCoeff() == 0.0);

  // With rho_e > 0 the transient decays geometrically and nothing else enters.
  cfg.rho_e = 0.5;
  const Dataset ar = simulate(cfg);
  for (int t = 1; t < cfg.T; ++t)
    CHECK((ar.truth->E.row(t) - 0.5 * ar.truth->E.row(t - 1)).cwiseAbs().maxCoeff() == 0.0);
}
