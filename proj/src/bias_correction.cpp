#include "wfr/bias_correction.hpp"

#include "wfr/covariance.hpp"
#include "wfr/factor.hpp"
#include "wfr/regression.hpp"
#include "wfr/rng.hpp"
#include "wfr/rotations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace wfr {

GMatrices g_matrices(const MatrixXd& Bhat, const MatrixXd& Sigma_e_hat) {
  const MatrixXd BtB = Bhat.transpose() * Bhat;
  Eigen::FullPivLU<MatrixXd> lu(BtB);
  if (!lu.isInvertible()) throw numerical_error("g_matrices: Bhat'Bhat is singular");
  const MatrixXd BtB_inv = lu.inverse();
  const MatrixXd M = Bhat.transpose() * Sigma_e_hat * Bhat;
  GMatrices out;
  out.Ghat = M * BtB_inv * BtB_inv;
  out.Gbar_hat = BtB_inv * M * BtB_inv;
  return out;
}

AnalyticBc analytic_bc(const AugmentedFit& fit, const PcEstimate& pc, const MatrixXd& W,
                       const MatrixXd& Sigma_e_hat) {
  const int r = fit.r, p = fit.p;
  const double T = double(W.rows());
  const VectorXd gamma_hat = fit.delta_hat.head(r);
  const GMatrices g = g_matrices(pc.Bhat, Sigma_e_hat);
  const MatrixXd WtF_over_T = W.transpose() * pc.Fhat / T;

  Eigen::LDLT<MatrixXd> ldlt(fit.ZtZ_over_T);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("analytic_bc: Z'Z/T factorization failed");

  VectorXd stacked(r + p);
  stacked.head(r) = (g.Ghat + g.Gbar_hat) * gamma_hat;
  stacked.tail(p) = WtF_over_T * (g.Ghat * gamma_hat);
  AnalyticBc out;
  out.kappa_hat = -ldlt.solve(stacked);

  stacked.head(r).setZero();
  stacked.tail(p) = WtF_over_T * (g.Gbar_hat * gamma_hat);
  out.kappa_bar_hat = ldlt.solve(stacked);

  out.delta_bc_Hhat = fit.delta_hat - out.kappa_hat;
  out.delta_bc_Hhat_q = fit.delta_hat - out.kappa_bar_hat;
  return out;
}

VectorXd jackknife_over_perms(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                              const std::vector<std::vector<int>>& perms,
                              const MatrixXd& Fhat_full, const VectorXd& delta_full) {
  const int N = int(X.cols());
  const int n_half = (N + 1) / 2;  // odd N: halves share the middle index
  VectorXd acc = VectorXd::Zero(delta_full.size());
  MatrixXd Xh(X.rows(), n_half);
  for (const auto& perm : perms) {
    for (int side = 0; side < 2; ++side) {
      for (int c = 0; c < n_half; ++c) Xh.col(c) = X.col(perm[side == 0 ? c : N - n_half + c]);
      PcEstimate pch = extract_factors(Xh, r);
      const Alignment al = align_factors(Fhat_full, pch.Fhat);
      const AugmentedFit fith = ols_augmented(y, apply_alignment(pch.Fhat, al), W);
      acc += fith.delta_hat;
    }
  }
  return 2.0 * delta_full - acc / double(2 * perms.size());
}

JackknifeResult jackknife_bc(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                             int R, std::uint64_t seed, const MatrixXd& Fhat_full,
                             const VectorXd& delta_full) {
  const int N = int(X.cols());
  if (N < 4) throw validation_error("jackknife_bc: need N >= 4");
  if (R < 1) throw validation_error("jackknife_bc: need R >= 1");

  std::mt19937_64 rng = make_stream(seed, 0);
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);

  JackknifeResult out;
  out.meta.R = R;
  out.meta.seed = seed;
  VectorXd total = VectorXd::Zero(delta_full.size());
  std::vector<std::vector<int>> one(1);
  for (int s = 0; s < R; ++s) {
    for (;;) {
      std::shuffle(perm.begin(), perm.end(), rng);
      one[0] = perm;
      try {
        // jackknife_over_perms returns 2*delta - mean; recover the split mean.
        const VectorXd bc = jackknife_over_perms(X, y, W, r, one, Fhat_full, delta_full);
        total += 2.0 * delta_full - bc;
        break;
      } catch (const numerical_error&) {
        if (++out.meta.redraws > 10 * R)
          throw numerical_error("jackknife_bc: rank failures exhausted the redraw budget");
      }
    }
    ++out.meta.splits_used;
  }
  out.delta_bcjk = 2.0 * delta_full - total / double(R);
  return out;
}

JackknifeResult jackknife_bc(const MatrixXd& X, const VectorXd& y, const MatrixXd& W, int r,
                             int R, std::uint64_t seed) {
  const PcEstimate pc = extract_factors(X, r);
  const AugmentedFit fit = ols_augmented(y, pc.Fhat, W);
  return jackknife_bc(X, y, W, r, R, seed, pc.Fhat, fit.delta_hat);
}

EstimateResult estimate_all(const Dataset& ds, int r, const EstimateOptions& options) {
  const int T = int(ds.X.rows());
  if (ds.y.size() != T || ds.W.rows() != T)
    throw validation_error("estimate_all: X, y and W must agree on T");

  EstimateResult res;
  const MatrixXd Xe = options.use_Mw ? project_out(ds.X, ds.W) : ds.X;
  res.pc = extract_factors(Xe, r);

  if (ds.truth) {
    // Per-draw PC signs (and in rare near-degenerate cases the order) are
    // arbitrary; fix them against the normalized truth basis so pseudo-true
    // vectors and replication averages are comparable component-wise.
    const MatrixXd F_ref = options.use_Mw ? project_out(ds.truth->F0, ds.W) : ds.truth->F0;
    const Alignment al = align_factors(F_ref, res.pc.Fhat);
    res.pc.Fhat = apply_alignment(res.pc.Fhat, al);
    res.pc.Bhat = apply_alignment(res.pc.Bhat, al);
    VectorXd lam(r);
    for (int k = 0; k < r; ++k) lam(k) = res.pc.LambdaHat(al.perm[k]);
    res.pc.LambdaHat = lam;

    const MatrixXd Fstar_e =
        options.use_Mw ? project_out(ds.truth->Fstar, ds.W) : ds.truth->Fstar;
    res.rotations = make_rotation_set(Fstar_e, ds.truth->Bstar, ds.truth->gamma_star, res.pc);

    if (options.use_Mw) {
      // Projecting X changes what the observed-regressor block estimates:
      // beta_w = (W'W)^-1 W'Fstar gamma_star + beta.
      Eigen::LDLT<MatrixXd> wtw(ds.W.transpose() * ds.W);
      res.beta_target =
          (wtw.solve(ds.W.transpose() * (ds.truth->Fstar * ds.truth->gamma_star)) + ds.truth->beta)
              .eval();
    } else {
      res.beta_target = ds.truth->beta;
    }
  }

  res.fit = ols_augmented(ds.y, res.pc.Fhat, ds.W);
  MatrixXd Z(T, r + int(ds.W.cols()));
  Z << res.pc.Fhat, ds.W;
  res.fit.cov_kind = options.cov_kind;
  switch (options.cov_kind) {
    case CovKind::homoskedastic:
      res.fit.cov_delta = cov_homoskedastic(res.fit, Z);
      break;
    case CovKind::heteroskedastic:
      res.fit.cov_delta = cov_sandwich_hetero(res.fit, Z);
      break;
    case CovKind::hac:
      res.fit.hac_bandwidth =
          options.hac_bandwidth >= 0 ? options.hac_bandwidth : default_hac_bandwidth(T);
      res.fit.cov_delta = cov_hac(res.fit, Z, res.fit.hac_bandwidth);
      break;
  }

  const MatrixXd Sigma_e_hat = poet_cov(residual_matrix(Xe, res.pc), options.poet);
  const AnalyticBc abc = analytic_bc(res.fit, res.pc, ds.W, Sigma_e_hat);
  res.bc.delta_hat = res.fit.delta_hat;
  res.bc.delta_bc_Hhat = abc.delta_bc_Hhat;
  res.bc.delta_bc_Hhat_q = abc.delta_bc_Hhat_q;
  res.bc.kappa_hat = abc.kappa_hat;
  res.bc.kappa_bar_hat = abc.kappa_bar_hat;
  if (options.with_jackknife) {
    JackknifeResult jk = jackknife_bc(Xe, ds.y, ds.W, r, options.jk_R, options.jk_seed,
                                      res.pc.Fhat, res.fit.delta_hat);
    res.bc.delta_bcjk = std::move(jk.delta_bcjk);
    res.bc.jk_meta = jk.meta;
  }
  return res;
}

}  // namespace wfr
