#include "wfr/factor.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wfr {

PcEstimate extract_factors(const MatrixXd& X, int r, double gap_tol) {
  const int T = int(X.rows()), N = int(X.cols());
  if (!X.allFinite()) throw validation_error("extract_factors: X has non-finite entries");
  if (r < 1 || r > std::min(N, T))
    throw validation_error("extract_factors: r must lie in [1, min(N,T)]");

  Eigen::SelfAdjointEigenSolver<MatrixXd> es((X * X.transpose()) / double(T));
  if (es.info() != Eigen::Success)
    throw numerical_error("extract_factors: eigendecomposition failed");

  // Eigen orders eigenvalues ascending; take the top r, largest first.
  const VectorXd& ev = es.eigenvalues();
  const double rank_tol = 1e-12;
  if (!(ev(T - r) > rank_tol * std::max(ev(T - 1), 0.0)) || !(ev(T - r) > 0.0)) {
    std::ostringstream os;
    os << "extract_factors: effective rank below r=" << r << " (eigenvalue " << r
       << " of XX'/T is " << ev(T - r) << ")";
    throw numerical_error(os.str());
  }
  if (T > r && ev(T - r) - ev(T - r - 1) <= gap_tol * ev(T - 1))
    std::fprintf(stderr,
                 "extract_factors: eigen gap between eigenvalues %d and %d below %g relative\n", r,
                 r + 1, gap_tol);

  PcEstimate pc;
  pc.r = r;
  pc.LambdaHat = VectorXd(r);
  MatrixXd U(T, r);
  for (int k = 0; k < r; ++k) {
    pc.LambdaHat(k) = ev(T - 1 - k);
    U.col(k) = es.eigenvectors().col(T - 1 - k);
    int imax = 0;
    U.col(k).cwiseAbs().maxCoeff(&imax);
    if (U(imax, k) < 0.0) U.col(k) = -U.col(k);
  }
  pc.Fhat = std::sqrt(double(T)) * U;
  pc.Bhat = X.transpose() * pc.Fhat / double(T);
  return pc;
}

MatrixXd project_out(const MatrixXd& X, const MatrixXd& W) {
  if (W.rows() != X.rows()) throw validation_error("project_out: row mismatch between X and W");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(W);
  if (qr.rank() < W.cols()) {
    const int offending = qr.colsPermutation().indices()(qr.rank());
    std::ostringstream os;
    os << "project_out: W is rank deficient, column " << offending
       << " is linearly dependent on the others";
    throw numerical_error(os.str());
  }
  return X - W * qr.solve(X);
}

}  // namespace wfr
