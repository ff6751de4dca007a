#pragma once

#include "wfr/types.hpp"

namespace wfr {

// Least squares of y on Z = (Fhat, W) via column-pivoted QR.  The returned
// fit has no covariance yet; attach one with the cov_* functions.
AugmentedFit ols_augmented(const VectorXd& y, const MatrixXd& Fhat, const MatrixXd& W);

// All cov_* functions return the variance of delta_hat itself (the 1/T
// scaling is already applied), so t-statistics never rescale.

// (Z'Z)^-1 [sum_t z_t e_t^2 z_t'] (Z'Z)^-1.
MatrixXd cov_sandwich_hetero(const AugmentedFit& fit, const MatrixXd& Zhat);

// sigma2_hat (Z'Z)^-1 with sigma2_hat = RSS/T.
MatrixXd cov_homoskedastic(const AugmentedFit& fit, const MatrixXd& Zhat);

// Bartlett-kernel long-run covariance of the scores z_t e_t with weights
// 1 - j/(bandwidth+1), sandwiched like the heteroskedastic estimator.
// bandwidth = 0 reproduces cov_sandwich_hetero.
MatrixXd cov_hac(const AugmentedFit& fit, const MatrixXd& Zhat, int bandwidth);

int default_hac_bandwidth(int T);  // floor(T^(1/4))

struct TestResult {
  double t_stat = 0;
  bool reject_5pct = false;
};

// Two-sided t-test of delta[index] = null_value at the 5% level (|t| > 1.96).
TestResult t_test(const AugmentedFit& fit, int index, double null_value);

// Linear-combination test of a'delta = null_value.
TestResult wald_linear(const AugmentedFit& fit, const VectorXd& a, double null_value);

}  // namespace wfr
