#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace wfr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// User-supplied configuration or data failed a validation check.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical routine could not produce a usable result (rank loss,
// singularity, eigenvalue degeneracy).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CovKind { homoskedastic, heteroskedastic, hac };
enum class ThresholdKind { hard, soft };

// Simulation design for a factor-augmented regression panel.  The k-th
// factor's signal eigenvalue is lambda_k = d_k * N^alpha_k; alpha_k = 1 is a
// strong factor, alpha_k < 1 a weak one.
struct DgpConfig {
  int N = 0;  // cross-section size
  int T = 0;  // time length
  int r = 0;  // number of latent factors
  int p = 0;  // number of observed regressors, last is the intercept
  VectorXd alpha;  // length r, entries in (0,1], nonincreasing
  VectorXd d;      // length r, positive scales
  MatrixXd H;      // r x r invertible mix linking F0 to Fstar
  double rho_e = 0.0;    // error AR(1) coefficient
  double sigma_e = 0.0;  // error scale
  double theta = 0.0;    // spatial coefficient
  int s_order = 1;       // contiguity order
  double rho_fw = 0.0;   // factor-regressor correlation
  double sigma_w = 1.0;
  double sigma_eps = 0.0;
  VectorXd gamma0;  // length r
  VectorXd beta;    // length p
  std::uint64_t seed = 1;

  // Implied signal eigenvalues lambda_k = d_k * N^alpha_k.
  VectorXd lambda() const;
  // Throws validation_error naming the offending field.  sigma_e and
  // sigma_eps may be zero (noise-free configurations used in tests).
  void validate() const;
};

struct GroundTruth {
  MatrixXd F0;      // T x r, F0'F0/T = I
  MatrixXd B0;      // N x r, B0'B0 = diag(Lambda)
  MatrixXd Fstar;   // F0 * H^-1
  MatrixXd Bstar;   // B0 * H'
  MatrixXd Hmat;    // the configured H
  VectorXd gamma0;
  VectorXd gamma_star;  // H * gamma0
  VectorXd beta;
  MatrixXd E;    // T x N idiosyncratic errors
  VectorXd eps;  // length T regression noise
  VectorXd Lambda;
};

struct Dataset {
  MatrixXd X;  // T x N predictor panel
  VectorXd y;  // length T; row t of X and W predicts y(t)
  MatrixXd W;  // T x p observed regressors, last column ones when simulated
  std::optional<GroundTruth> truth;
};

// Principal-component estimate with normalization Fhat'Fhat/T = I and
// Bhat'Bhat = diag(LambdaHat), LambdaHat strictly decreasing.
struct PcEstimate {
  MatrixXd Fhat;       // T x r
  MatrixXd Bhat;       // N x r
  VectorXd LambdaHat;  // length r
  int r = 0;
};

struct AugmentedFit {
  VectorXd delta_hat;   // length r+p, gamma then beta
  VectorXd resid;       // length T
  MatrixXd ZtZ_over_T;  // (r+p) x (r+p)
  MatrixXd cov_delta;   // variance of delta_hat itself; empty until set
  CovKind cov_kind = CovKind::heteroskedastic;
  int hac_bandwidth = 0;
  int r = 0;
  int p = 0;

  bool has_cov() const { return cov_delta.size() > 0; }
};

struct RotationSet {
  MatrixXd H;       // population rotation from the truth
  MatrixXd Hhat;    // loading-based data rotation
  MatrixXd Hhat_q;  // cross-product data rotation
  VectorXd gamma0;        // H^-1 gamma_star
  VectorXd gamma_Hhat;    // Hhat^-1 gamma_star
  VectorXd gamma_Hhat_q;  // Hhat_q^-1 gamma_star
};

struct PoetConfig {
  double threshold_const = 0.5;  // C >= 0
  ThresholdKind kind = ThresholdKind::hard;
  bool enforce_psd = true;
};

struct JackknifeMeta {
  int R = 0;
  std::uint64_t seed = 0;
  int redraws = 0;      // splits redrawn after a rank failure
  int splits_used = 0;  // successful splits (== R on success)
};

struct BiasCorrectedSet {
  VectorXd delta_hat;
  VectorXd delta_bc_Hhat;    // delta_hat - kappa_hat
  VectorXd delta_bc_Hhat_q;  // delta_hat - kappa_bar_hat
  VectorXd delta_bcjk;       // empty when the jackknife was not run
  VectorXd kappa_hat;
  VectorXd kappa_bar_hat;
  JackknifeMeta jk_meta;
};

struct EstimateOptions {
  PoetConfig poet;
  bool with_jackknife = true;
  int jk_R = 100;
  std::uint64_t jk_seed = 1;
  bool use_Mw = false;
  CovKind cov_kind = CovKind::heteroskedastic;
  int hac_bandwidth = -1;  // -1 selects floor(T^(1/4))
};

struct EstimateResult {
  PcEstimate pc;
  AugmentedFit fit;
  std::optional<RotationSet> rotations;  // present iff the dataset has truth
  BiasCorrectedSet bc;
  // Target for the observed-regressor block: beta, or the projected-panel
  // counterpart (W'W)^-1 W'Fstar gamma_star + beta when use_Mw is on.
  // Present iff the dataset has truth.
  std::optional<VectorXd> beta_target;
};

}  // namespace wfr
