#pragma once

#include "wfr/types.hpp"

#include <random>

namespace wfr {

// Symmetric PSD square root via eigendecomposition.  Used for Sigma_e^(1/2);
// the symmetric root is permutation-covariant, which the jackknife's column
// randomization relies on.
MatrixXd sym_sqrt(const MatrixXd& A);

// Correlation matrix of (I - theta*S)(I - theta*S)' where S is the
// row-normalized band matrix with neighbors within s_order positions.
MatrixXd build_spatial_corr(int N, int s_order, double theta);

struct FactorStructure {
  MatrixXd F0;
  MatrixXd B0;
  MatrixXd Fstar;
  MatrixXd Bstar;
  VectorXd Lambda;
};

// Factor structure from the SVD of an iid standard normal T x N matrix:
// F0 = sqrt(T) * (top-r left singular vectors), B0 = (top-r right singular
// vectors) scaled to squared column norms lambda_k.  Column signs fixed by
// making the largest-|entry| element of each left vector positive, flipping
// the paired right vector too so F0*B0' is unchanged.
FactorStructure gen_factor_structure(const DgpConfig& cfg, std::mt19937_64& rng);

// T x N error panel: e_1 ~ N(0, I_N), then
// e_t = rho_e * e_{t-1} + sqrt(1 - rho_e^2) * Sigma_e_half * xi_t.
MatrixXd gen_errors(const DgpConfig& cfg, const MatrixXd& Sigma_e_half, std::mt19937_64& rng);

struct RegressionPart {
  VectorXd y;
  MatrixXd W;
  VectorXd eps;
};

// Observed regressors (last column ones) correlated with the average factor,
// and the response y_t = f0_t'gamma0 + w_t'beta + eps_t.
RegressionPart gen_regression(const DgpConfig& cfg, const MatrixXd& F0, std::mt19937_64& rng);

// Full simulated dataset with ground truth; a pure function of cfg.
Dataset simulate(const DgpConfig& cfg);

}  // namespace wfr
