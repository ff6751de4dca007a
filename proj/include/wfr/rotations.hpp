#pragma once

#include "wfr/types.hpp"

#include <vector>

namespace wfr {

// The unique (up to sign) rotation H with (Fstar*H)'(Fstar*H)/T = I and
// (Bstar*H'^-1)'(Bstar*H'^-1) diagonal with decreasing diagonal.  Sign fixed
// by making diag(H) positive.
MatrixXd rotation_H(const MatrixXd& Fstar, const MatrixXd& Bstar);

// Loading-based data rotation Bstar'Bstar (Fstar'Fhat/T) LambdaHat^-1.
MatrixXd rotation_Hhat(const MatrixXd& Fstar, const MatrixXd& Bstar, const PcEstimate& pc);

// Cross-product data rotation (Fhat'Fstar/T)^-1; satisfies
// Fhat'(Fhat - Fstar*Hhat_q) = 0 up to round-off.
MatrixXd rotation_Hhat_q(const MatrixXd& Fstar, const PcEstimate& pc);

// gamma_R = R^-1 gamma_star.
VectorXd pseudo_true(const VectorXd& gamma_star, const MatrixXd& R);

struct TildeRotations {
  MatrixXd Htilde;    // B0'B0 (F0'Fhat/T) LambdaHat^-1
  MatrixXd Htilde_q;  // (Fhat'F0/T)^-1
  MatrixXd Htilde_b;  // B0'Bhat (Bhat'Bhat)^-1
  double dist_H = 0;  // Frobenius distances from the identity
  double dist_q = 0;
  double dist_b = 0;
};

// Diagnostic rotations relative to the normalized truth basis; all three are
// near the identity when estimation error is small, and Hhat = H * Htilde,
// Hhat_q = H * Htilde_q hold exactly.
TildeRotations tilde_rotations(const GroundTruth& truth, const PcEstimate& pc);

struct Alignment {
  std::vector<int> perm;  // perm[j] = sub column matched to ref column j
  VectorXd signs;         // sign applied to that sub column
};

// Greedy maximum-|correlation| assignment of sub columns to ref columns:
// repeatedly take the unassigned pair with the largest absolute sample
// correlation; the sign is the sign of that correlation.  Ties break toward
// the lowest ref index, then the lowest sub index.
Alignment align_factors(const MatrixXd& F_ref, const MatrixXd& F_sub);

// Columns of F_sub reordered and re-signed per the alignment.
MatrixXd apply_alignment(const MatrixXd& F_sub, const Alignment& a);

// H, Hhat, Hhat_q and their pseudo-true vectors for one dataset.  Fstar and
// gamma_star must come from the same basis the PC estimate is aligned to.
RotationSet make_rotation_set(const MatrixXd& Fstar, const MatrixXd& Bstar,
                              const VectorXd& gamma_star, const PcEstimate& pc);

}  // namespace wfr
