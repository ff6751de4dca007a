#pragma once

#include "wfr/types.hpp"

#include <vector>

namespace wfr {

struct GMatrices {
  MatrixXd Ghat;      // Bhat'Sigma_e Bhat (Bhat'Bhat)^-2
  MatrixXd Gbar_hat;  // (Bhat'Bhat)^-1 Bhat'Sigma_e Bhat (Bhat'Bhat)^-1
};

GMatrices g_matrices(const MatrixXd& Bhat, const MatrixXd& Sigma_e_hat);

struct AnalyticBc {
  VectorXd delta_bc_Hhat;    // delta_hat - kappa_hat
  VectorXd delta_bc_Hhat_q;  // delta_hat - kappa_bar_hat
  VectorXd kappa_hat;        // -(Z'Z/T)^-1 [(Ghat+Gbar)gamma_hat; W'Fhat/T Ghat gamma_hat]
  VectorXd kappa_bar_hat;    //  (Z'Z/T)^-1 [0; W'Fhat/T Gbar gamma_hat]
};

AnalyticBc analytic_bc(const AugmentedFit& fit, const PcEstimate& pc, const MatrixXd& W,
                       const MatrixXd& Sigma_e_hat);

// Deterministic jackknife core over explicit column permutations.  For each
// permutation the first ceil(N/2) and last ceil(N/2) columns form the two
// half panels (they share the middle column when N is odd); each half's PC
// factors are aligned in order and sign to Fhat_full before the regression.
// Returns 2*delta_full - average of the half-panel estimates.
// Throws numerical_error when a half panel has effective rank below r.
VectorXd jackknife_over_perms(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                              const std::vector<std::vector<int>>& perms,
                              const MatrixXd& Fhat_full, const VectorXd& delta_full);

struct JackknifeResult {
  VectorXd delta_bcjk;
  JackknifeMeta meta;
};

// Randomized split-panel jackknife with R column permutations drawn from the
// seeded stream.  A split whose half panel loses rank is redrawn (counted in
// meta.redraws); the run fails after 10*R redraws.
JackknifeResult jackknife_bc(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                             int R, std::uint64_t seed);
JackknifeResult jackknife_bc(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                             int R, std::uint64_t seed, const MatrixXd& Fhat_full,
                             const VectorXd& delta_full);

// End-to-end pipeline: extraction (optionally on the W-projected panel),
// alignment to the truth basis when available, regression, covariance,
// POET residual covariance, analytic corrections, jackknife.
EstimateResult estimate_all(const Dataset& ds, int r, const EstimateOptions& options);

}  // namespace wfr
