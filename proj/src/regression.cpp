#include "wfr/regression.hpp"

#include <cmath>
#include <sstream>

namespace wfr {

AugmentedFit ols_augmented(const VectorXd& y, const MatrixXd& Fhat, const MatrixXd& W) {
  const int T = int(y.size());
  if (Fhat.rows() != T || W.rows() != T)
    throw validation_error("ols_augmented: row mismatch between y, Fhat and W");
  const int r = int(Fhat.cols()), p = int(W.cols());
  MatrixXd Z(T, r + p);
  Z << Fhat, W;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Z);
  if (qr.rank() < r + p) {
    const int offending = qr.colsPermutation().indices()(qr.rank());
    std::ostringstream os;
    os << "ols_augmented: regressor matrix is rank deficient, column " << offending
       << " is linearly dependent on the others";
    throw numerical_error(os.str());
  }
  AugmentedFit fit;
  fit.r = r;
  fit.p = p;
  fit.delta_hat = qr.solve(y);
  fit.resid = y - Z * fit.delta_hat;
  fit.ZtZ_over_T = Z.transpose() * Z / double(T);
  return fit;
}

namespace {

MatrixXd sandwich(const AugmentedFit& fit, const MatrixXd& Zhat, const MatrixXd& meat_sum) {
  // cov(delta_hat) = (Z'Z)^-1 [sum_t z_t e_t^2 z_t'] (Z'Z)^-1, HAC analogous.
  const double T = double(Zhat.rows());
  const MatrixXd ZtZ = fit.ZtZ_over_T * T;
  Eigen::LDLT<MatrixXd> ldlt(ZtZ);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("covariance: Z'Z factorization failed");
  const MatrixXd half = ldlt.solve(meat_sum);
  MatrixXd cov = ldlt.solve(half.transpose()).transpose();
  return ((cov + cov.transpose()) / 2.0).eval();
}

}  // namespace

MatrixXd cov_sandwich_hetero(const AugmentedFit& fit, const MatrixXd& Zhat) {
  const MatrixXd scores = Zhat.array().colwise() * fit.resid.array();
  return sandwich(fit, Zhat, scores.transpose() * scores);
}

MatrixXd cov_homoskedastic(const AugmentedFit& fit, const MatrixXd& Zhat) {
  const double T = double(Zhat.rows());
  const double sigma2 = fit.resid.squaredNorm() / T;
  Eigen::LDLT<MatrixXd> ldlt(fit.ZtZ_over_T * T);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("covariance: Z'Z factorization failed");
  MatrixXd cov = sigma2 * ldlt.solve(MatrixXd::Identity(Zhat.cols(), Zhat.cols()));
  return ((cov + cov.transpose()) / 2.0).eval();
}

MatrixXd cov_hac(const AugmentedFit& fit, const MatrixXd& Zhat, int bandwidth) {
  const int T = int(Zhat.rows());
  if (bandwidth < 0 || bandwidth >= T)
    throw validation_error("cov_hac: bandwidth must lie in [0, T)");
  const MatrixXd scores = Zhat.array().colwise() * fit.resid.array();
  MatrixXd S = scores.transpose() * scores;
  for (int j = 1; j <= bandwidth; ++j) {
    const double w = 1.0 - double(j) / double(bandwidth + 1);
    const MatrixXd Gj =
        scores.bottomRows(T - j).transpose() * scores.topRows(T - j);  // sum_t g_t g_{t-j}'
    S += w * (Gj + Gj.transpose());
  }
  return sandwich(fit, Zhat, S);
}

int default_hac_bandwidth(int T) {
  // Nudge before flooring so exact fourth powers are safe under a pow
  // implementation that is not exactly rounded.
  return int(std::floor(std::pow(double(T), 0.25) + 1e-12));
}

TestResult t_test(const AugmentedFit& fit, int index, double null_value) {
  if (!fit.has_cov()) throw validation_error("t_test: fit has no covariance attached");
  if (index < 0 || index >= int(fit.delta_hat.size()))
    throw validation_error("t_test: coefficient index out of range");
  const double v = fit.cov_delta(index, index);
  if (!(v > 0.0)) throw numerical_error("t_test: nonpositive coefficient variance");
  TestResult res;
  res.t_stat = (fit.delta_hat(index) - null_value) / std::sqrt(v);
  res.reject_5pct = std::abs(res.t_stat) > 1.96;
  return res;
}

TestResult wald_linear(const AugmentedFit& fit, const VectorXd& a, double null_value) {
  if (!fit.has_cov()) throw validation_error("wald_linear: fit has no covariance attached");
  if (a.size() != fit.delta_hat.size())
    throw validation_error("wald_linear: weight vector has wrong length");
  const double v = a.dot(fit.cov_delta * a);
  if (!(v > 0.0)) throw numerical_error("wald_linear: nonpositive combination variance");
  TestResult res;
  res.t_stat = (a.dot(fit.delta_hat) - null_value) / std::sqrt(v);
  res.reject_5pct = std::abs(res.t_stat) > 1.96;
  return res;
}

}  // namespace wfr
