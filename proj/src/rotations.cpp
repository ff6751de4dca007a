#include "wfr/rotations.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wfr {

namespace {

// Inverse via LU with an explicit singularity check.
MatrixXd checked_inverse(const MatrixXd& A, const char* what) {
  Eigen::FullPivLU<MatrixXd> lu(A);
  if (!lu.isInvertible()) throw numerical_error(std::string(what) + ": singular matrix");
  return lu.inverse();
}

}  // namespace

MatrixXd rotation_H(const MatrixXd& Fstar, const MatrixXd& Bstar) {
  const int r = int(Fstar.cols());
  const double T = double(Fstar.rows());
  const MatrixXd S_F = Fstar.transpose() * Fstar / T;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_F(S_F);
  if (es_F.info() != Eigen::Success || es_F.eigenvalues()(0) <= 0.0)
    throw numerical_error("rotation_H: Fstar'Fstar/T is not positive definite");

  // Diagonalize B*'B* in the S_F metric: the eigenvectors Q of
  // S_F^(1/2) B*'B* S_F^(1/2) give H = S_F^(-1/2) Q, which satisfies both
  // normalization conditions with the eigenvalue scale fixed.
  const VectorXd ev_sqrt = es_F.eigenvalues().cwiseSqrt();
  const MatrixXd S_half = es_F.eigenvectors() * ev_sqrt.asDiagonal() * es_F.eigenvectors().transpose();
  const MatrixXd S_half_inv =
      es_F.eigenvectors() * ev_sqrt.cwiseInverse().asDiagonal() * es_F.eigenvectors().transpose();

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S_half * (Bstar.transpose() * Bstar) * S_half);
  if (es.info() != Eigen::Success) throw numerical_error("rotation_H: eigendecomposition failed");
  const VectorXd& mu = es.eigenvalues();  // ascending
  for (int k = 1; k < r; ++k)
    if (mu(r - k) - mu(r - k - 1) <= 1e-12 * std::abs(mu(r - 1))) {
      std::ostringstream os;
      os << "rotation_H: degenerate eigenvalues " << mu(r - k - 1) << " and " << mu(r - k)
         << ", rotation not unique";
      throw numerical_error(os.str());
    }

  MatrixXd Q(r, r);
  for (int k = 0; k < r; ++k) Q.col(k) = es.eigenvectors().col(r - 1 - k);
  MatrixXd H = S_half_inv * Q;
  for (int k = 0; k < r; ++k)
    if (H(k, k) < 0.0) H.col(k) = -H.col(k);  // diag(H) positive
  return H;
}

MatrixXd rotation_Hhat(const MatrixXd& Fstar, const MatrixXd& Bstar, const PcEstimate& pc) {
  const double T = double(Fstar.rows());
  for (int k = 0; k < pc.r; ++k)
    if (!(pc.LambdaHat(k) > 0.0)) throw numerical_error("rotation_Hhat: nonpositive LambdaHat");
  return (Bstar.transpose() * Bstar) * (Fstar.transpose() * pc.Fhat / T) *
         pc.LambdaHat.cwiseInverse().asDiagonal();
}

MatrixXd rotation_Hhat_q(const MatrixXd& Fstar, const PcEstimate& pc) {
  const double T = double(Fstar.rows());
  const MatrixXd C = pc.Fhat.transpose() * Fstar / T;
  Eigen::JacobiSVD<MatrixXd> svd(C);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double smax = svd.singularValues()(0);
  if (!(smin > 1e-12 * smax)) {
    std::ostringstream os;
    os << "rotation_Hhat_q: Fhat'Fstar/T is near singular, condition number "
       << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
    throw numerical_error(os.str());
  }
  return checked_inverse(C, "rotation_Hhat_q");
}

VectorXd pseudo_true(const VectorXd& gamma_star, const MatrixXd& R) {
  Eigen::FullPivLU<MatrixXd> lu(R);
  if (!lu.isInvertible()) throw numerical_error("pseudo_true: singular rotation");
  return lu.solve(gamma_star);
}

TildeRotations tilde_rotations(const GroundTruth& truth, const PcEstimate& pc) {
  const double T = double(truth.F0.rows());
  TildeRotations out;
  out.Htilde = (truth.B0.transpose() * truth.B0) * (truth.F0.transpose() * pc.Fhat / T) *
               pc.LambdaHat.cwiseInverse().asDiagonal();
  out.Htilde_q = checked_inverse(pc.Fhat.transpose() * truth.F0 / T, "tilde_rotations");
  out.Htilde_b = truth.B0.transpose() * pc.Bhat *
                 checked_inverse(pc.Bhat.transpose() * pc.Bhat, "tilde_rotations");
  const MatrixXd I = MatrixXd::Identity(pc.r, pc.r);
  out.dist_H = (out.Htilde - I).norm();
  out.dist_q = (out.Htilde_q - I).norm();
  out.dist_b = (out.Htilde_b - I).norm();
  return out;
}

Alignment align_factors(const MatrixXd& F_ref, const MatrixXd& F_sub) {
  const int r = int(F_ref.cols());
  if (F_sub.cols() != r || F_sub.rows() != F_ref.rows())
    throw validation_error("align_factors: dimension mismatch");
  const int T = int(F_ref.rows());

  auto centered = [](const MatrixXd& F, int j, VectorXd& out) {
    out = F.col(j).array() - F.col(j).mean();
    const double n = out.norm();
    if (n > 0.0) out /= n;
    return n > 0.0;
  };
  MatrixXd corr(r, r);
  VectorXd a(T), b(T);
  for (int i = 0; i < r; ++i) {
    const bool oki = centered(F_ref, i, a);
    for (int j = 0; j < r; ++j) {
      const bool okj = centered(F_sub, j, b);
      corr(i, j) = (oki && okj) ? a.dot(b) : 0.0;
    }
  }

  Alignment al;
  al.perm.assign(r, -1);
  al.signs = VectorXd::Ones(r);
  std::vector<bool> ref_used(r, false), sub_used(r, false);
  for (int step = 0; step < r; ++step) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < r; ++i) {
      if (ref_used[i]) continue;
      for (int j = 0; j < r; ++j) {
        if (sub_used[j]) continue;
        if (std::abs(corr(i, j)) > best) {  // ties keep the lowest (i, j)
          best = std::abs(corr(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    ref_used[bi] = true;
    sub_used[bj] = true;
    al.perm[bi] = bj;
    al.signs(bi) = corr(bi, bj) < 0.0 ? -1.0 : 1.0;
  }
  return al;
}

MatrixXd apply_alignment(const MatrixXd& F_sub, const Alignment& a) {
  MatrixXd out(F_sub.rows(), F_sub.cols());
  for (int i = 0; i < int(a.perm.size()); ++i) out.col(i) = a.signs(i) * F_sub.col(a.perm[i]);
  return out;
}

RotationSet make_rotation_set(const MatrixXd& Fstar, const MatrixXd& Bstar,
                              const VectorXd& gamma_star, const PcEstimate& pc) {
  RotationSet rs;
  rs.H = rotation_H(Fstar, Bstar);
  rs.Hhat = rotation_Hhat(Fstar, Bstar, pc);
  rs.Hhat_q = rotation_Hhat_q(Fstar, pc);
  rs.gamma0 = pseudo_true(gamma_star, rs.H);
  rs.gamma_Hhat = pseudo_true(gamma_star, rs.Hhat);
  rs.gamma_Hhat_q = pseudo_true(gamma_star, rs.Hhat_q);
  return rs;
}

}  // namespace wfr
