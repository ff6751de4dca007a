#pragma once

#include "wfr/types.hpp"

namespace wfr {

// PC residuals Ehat = X - Fhat*Bhat'.
MatrixXd residual_matrix(const MatrixXd& X, const PcEstimate& pc);

// Adaptive-threshold covariance of PC residuals: S = Ehat'Ehat/T, entry
// threshold tau_ij = C * sqrt(theta_ij) * sqrt(log(N)/T) with
// theta_ij = T^-1 sum_t (e_ti e_tj - S_ij)^2; off-diagonals hard- or
// soft-thresholded, diagonal kept.  With enforce_psd, eigenvalues are floored
// at 1e-8 * max eigenvalue, but only when the thresholded matrix actually has
// one below the floor (the reconstruction perturbs the diagonal slightly, so
// it is skipped when not needed).
MatrixXd poet_cov(const MatrixXd& Ehat, const PoetConfig& cfg);

// Eigenvalues of the symmetric A floored at min_eig; used by poet_cov's PSD
// enforcement and exposed for direct testing.
MatrixXd floor_eigenvalues(const MatrixXd& A, double min_eig);

}  // namespace wfr
