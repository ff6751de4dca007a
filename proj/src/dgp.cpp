#include "wfr/dgp.hpp"

#include "wfr/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wfr {

VectorXd DgpConfig::lambda() const {
  VectorXd lam(r);
  for (int k = 0; k < r; ++k) lam(k) = d(k) * std::pow(double(N), alpha(k));
  return lam;
}

void DgpConfig::validate() const {
  auto fail = [](const std::string& msg) { throw validation_error("DgpConfig: " + msg); };
  if (N < 2) fail("N must be at least 2");
  if (T < 2) fail("T must be at least 2");
  if (r < 1 || r > std::min(N, T)) fail("r must be in [1, min(N,T)]");
  if (p < 1) fail("p must be at least 1");
  if (alpha.size() != r) fail("alpha must have length r");
  if (d.size() != r) fail("d must have length r");
  if (gamma0.size() != r) fail("gamma0 must have length r");
  if (beta.size() != p) fail("beta must have length p");
  for (int k = 0; k < r; ++k) {
    if (!(alpha(k) > 0.0 && alpha(k) <= 1.0)) fail("alpha entries must lie in (0,1]");
    if (k > 0 && alpha(k) > alpha(k - 1)) fail("alpha must be nonincreasing");
    if (!(d(k) > 0.0)) fail("d entries must be positive");
  }
  const VectorXd lam = lambda();
  for (int k = 1; k < r; ++k) {
    if (!(lam(k) < lam(k - 1))) {
      std::ostringstream os;
      os << "implied eigenvalues d_k*N^alpha_k must be strictly decreasing; got lambda("
         << k << ")=" << lam(k) << " >= lambda(" << k - 1 << ")=" << lam(k - 1);
      fail(os.str());
    }
  }
  if (H.rows() != r || H.cols() != r) fail("H must be r x r");
  Eigen::FullPivLU<MatrixXd> lu(H);
  if (!lu.isInvertible()) fail("H must be invertible");
  if (!(rho_e >= 0.0 && rho_e < 1.0)) fail("rho_e must lie in [0,1)");
  if (sigma_e < 0.0) fail("sigma_e must be nonnegative");
  if (s_order < 1) fail("s_order must be at least 1");
  if (std::abs(rho_fw) > 1.0) fail("rho_fw must lie in [-1,1]");
  if (!(sigma_w > 0.0)) fail("sigma_w must be positive");
  if (sigma_eps < 0.0) fail("sigma_eps must be nonnegative");
}

MatrixXd sym_sqrt(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw numerical_error("sym_sqrt: eigendecomposition failed");
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd build_spatial_corr(int N, int s_order, double theta) {
  if (N < 2) throw validation_error("build_spatial_corr: N must be at least 2");
  if (s_order < 1) throw validation_error("build_spatial_corr: s_order must be at least 1");
  if (N < s_order + 1)
    std::fprintf(stderr, "build_spatial_corr: N=%d <= s_order=%d, all units are neighbors\n", N,
                 s_order);
  MatrixXd S = MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = std::max(0, i - s_order); j <= std::min(N - 1, i + s_order); ++j)
      if (j != i) S(i, j) = 1.0;
    S.row(i) /= S.row(i).sum();  // each unit has at least one neighbor for N >= 2
  }
  MatrixXd A = MatrixXd::Identity(N, N) - theta * S;
  MatrixXd M = A * A.transpose();
  VectorXd dinv = M.diagonal();
  for (int i = 0; i < N; ++i) {
    if (!(dinv(i) > 0.0)) throw numerical_error("build_spatial_corr: nonpositive diagonal in M");
    dinv(i) = 1.0 / std::sqrt(dinv(i));
  }
  MatrixXd R = dinv.asDiagonal() * M * dinv.asDiagonal();
  R.diagonal().setOnes();  // exact unit diagonal
  R = ((R + R.transpose()) / 2.0).eval();
  return R;
}

FactorStructure gen_factor_structure(const DgpConfig& cfg, std::mt19937_64& rng) {
  const int T = cfg.T, N = cfg.N, r = cfg.r;
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  FactorStructure out;
  for (int attempt = 0;; ++attempt) {
    MatrixXd A(T, N);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < N; ++i) A(t, i) = stdnorm(rng);
    Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(r - 1) > 1e-12 * svd.singularValues()(0)) {
      MatrixXd U = svd.matrixU().leftCols(r);
      MatrixXd V = svd.matrixV().leftCols(r);
      for (int k = 0; k < r; ++k) {
        int imax = 0;
        U.col(k).cwiseAbs().maxCoeff(&imax);
        if (U(imax, k) < 0.0) {  // joint flip keeps the signal part F0*B0' fixed
          U.col(k) = -U.col(k);
          V.col(k) = -V.col(k);
        }
      }
      out.Lambda = cfg.lambda();
      out.F0 = std::sqrt(double(T)) * U;
      out.B0 = V * out.Lambda.cwiseSqrt().asDiagonal();
      break;
    }
    if (attempt >= 1) throw numerical_error("gen_factor_structure: rank-deficient normal draw twice");
  }
  MatrixXd Hinv = cfg.H.inverse();
  out.Fstar = out.F0 * Hinv;
  out.Bstar = out.B0 * cfg.H.transpose();
  return out;
}

MatrixXd gen_errors(const DgpConfig& cfg, const MatrixXd& Sigma_e_half, std::mt19937_64& rng) {
  const int T = cfg.T, N = cfg.N;
  if (Sigma_e_half.rows() != N || Sigma_e_half.cols() != N)
    throw validation_error("gen_errors: Sigma_e_half must be N x N");
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  MatrixXd E(T, N);
  for (int i = 0; i < N; ++i) E(0, i) = stdnorm(rng);
  const double innov_scale = std::sqrt(1.0 - cfg.rho_e * cfg.rho_e);
  VectorXd xi(N);
  for (int t = 1; t < T; ++t) {
    for (int i = 0; i < N; ++i) xi(i) = stdnorm(rng);
    E.row(t) = cfg.rho_e * E.row(t - 1) + innov_scale * (Sigma_e_half * xi).transpose();
  }
  return E;
}

RegressionPart gen_regression(const DgpConfig& cfg, const MatrixXd& F0, std::mt19937_64& rng) {
  const int T = cfg.T, r = cfg.r, p = cfg.p;
  if (std::abs(cfg.rho_fw) > 1.0) throw validation_error("gen_regression: |rho_fw| > 1");
  if (F0.rows() != T || F0.cols() != r)
    throw validation_error("gen_regression: F0 must be T x r");
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  RegressionPart out;
  out.W = MatrixXd::Ones(T, p);
  const VectorXd fbar = F0 * VectorXd::Constant(r, 1.0 / std::sqrt(double(r)));
  const double mix = std::sqrt(1.0 - cfg.rho_fw * cfg.rho_fw);
  for (int t = 0; t < T; ++t)
    for (int l = 0; l < p - 1; ++l)
      out.W(t, l) = cfg.sigma_w * (cfg.rho_fw * fbar(t) + mix * stdnorm(rng));
  out.eps = VectorXd(T);
  for (int t = 0; t < T; ++t) out.eps(t) = cfg.sigma_eps * stdnorm(rng);
  out.y = F0 * cfg.gamma0 + out.W * cfg.beta + out.eps;
  return out;
}

Dataset simulate(const DgpConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng = make_stream(cfg.seed, 0);
  FactorStructure fs = gen_factor_structure(cfg, rng);
  const MatrixXd R = build_spatial_corr(cfg.N, cfg.s_order, cfg.theta);
  const MatrixXd Sigma_e_half = sym_sqrt(cfg.sigma_e * cfg.sigma_e * R);
  const MatrixXd E = gen_errors(cfg, Sigma_e_half, rng);
  RegressionPart reg = gen_regression(cfg, fs.F0, rng);

  Dataset ds;
  ds.X = fs.F0 * fs.B0.transpose() + E;
  ds.y = reg.y;
  ds.W = reg.W;
  GroundTruth gt;
  gt.F0 = std::move(fs.F0);
  gt.B0 = std::move(fs.B0);
  gt.Fstar = std::move(fs.Fstar);
  gt.Bstar = std::move(fs.Bstar);
  gt.Hmat = cfg.H;
  gt.gamma0 = cfg.gamma0;
  gt.gamma_star = cfg.H * cfg.gamma0;
  gt.beta = cfg.beta;
  gt.E = E;
  gt.eps = std::move(reg.eps);
  gt.Lambda = std::move(fs.Lambda);
  ds.truth = std::move(gt);
  return ds;
}

}  // namespace wfr
