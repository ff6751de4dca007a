#pragma once

#include "wfr/types.hpp"

namespace wfr {

// PC estimator: eigendecomposition of XX'/T (always the T x T path),
// Fhat = sqrt(T) * top-r eigenvectors, Bhat = X'Fhat/T.  Column signs fixed
// by making the largest-|entry| element of each eigenvector positive.
// Throws numerical_error when the effective rank is below r; warns on stderr
// when the r-th eigen gap is below gap_tol (relative).
PcEstimate extract_factors(const MatrixXd& X, int r, double gap_tol = 1e-10);

// Residual of the column-wise regression of X on W: X_w = X - W(W'W)^-1 W'X.
// Throws numerical_error naming the offending column when W is rank
// deficient.
MatrixXd project_out(const MatrixXd& X, const MatrixXd& W);

}  // namespace wfr
