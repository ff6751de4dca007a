#include "wfr/covariance.hpp"

#include <cmath>

namespace wfr {

MatrixXd residual_matrix(const MatrixXd& X, const PcEstimate& pc) {
  if (X.rows() != pc.Fhat.rows() || X.cols() != pc.Bhat.rows())
    throw validation_error("residual_matrix: X does not match the PC estimate");
  return X - pc.Fhat * pc.Bhat.transpose();
}

MatrixXd floor_eigenvalues(const MatrixXd& A, double min_eig) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw numerical_error("floor_eigenvalues: eigendecomposition failed");
  const VectorXd ev = es.eigenvalues().cwiseMax(min_eig);
  MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return ((out + out.transpose()) / 2.0).eval();
}

MatrixXd poet_cov(const MatrixXd& Ehat, const PoetConfig& cfg) {
  const int T = int(Ehat.rows()), N = int(Ehat.cols());
  if (T < 2) throw validation_error("poet_cov: need T >= 2");
  if (cfg.threshold_const < 0.0) throw validation_error("poet_cov: threshold_const must be >= 0");

  const MatrixXd S = Ehat.transpose() * Ehat / double(T);
  // theta_ij = T^-1 sum_t (e_ti e_tj - S_ij)^2 = [ (E.^2)'(E.^2)/T - S.^2 ]_ij
  const MatrixXd E2 = Ehat.cwiseProduct(Ehat);
  const MatrixXd theta = (E2.transpose() * E2 / double(T) - S.cwiseProduct(S)).cwiseMax(0.0);
  const double omega = std::sqrt(std::log(double(N)) / double(T));

  MatrixXd out = S;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double tau = cfg.threshold_const * std::sqrt(theta(i, j)) * omega;
      double v = S(i, j);
      if (cfg.kind == ThresholdKind::hard) {
        if (std::abs(v) <= tau) v = 0.0;
      } else {
        v = std::abs(v) <= tau ? 0.0 : (v > 0.0 ? v - tau : v + tau);
      }
      out(i, j) = v;
      out(j, i) = v;
    }
  }

  if (cfg.enforce_psd) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(out, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("poet_cov: eigenvalue check failed");
    const double floor = 1e-8 * std::max(es.eigenvalues()(N - 1), 0.0);
    // Reconstruction perturbs the kept entries at round-off scale, so only
    // rebuild when an eigenvalue actually sits below the floor.
    if (es.eigenvalues()(0) < floor) out = floor_eigenvalues(out, floor);
  }
  return out;
}

}  // namespace wfr
