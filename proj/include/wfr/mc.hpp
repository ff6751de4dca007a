#pragma once

#include "wfr/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wfr {

// A cell of the run exceeded the 1% replication-drop budget.
struct excessive_drops_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Design {
  VectorXd alpha;
  VectorXd d;
};

struct PowerSpec {
  int coef = 0;  // index into delta0 = (gamma0, beta)
  std::vector<double> grid;
};

struct ExperimentSpec {
  DgpConfig base;  // r, p, H, noise and regression parameters; N/T/alpha/d/rho_fw
                   // are overwritten per cell, seed is the master seed
  std::vector<int> sizes;  // N = T
  std::vector<Design> designs;
  std::vector<double> rho_fw_values;
  int nrep = 1000;
  std::vector<std::string> estimators;  // subset of ls, bcjk, bcHhatq, bcHhat
  std::vector<std::string> targets;     // subset of delta0, delta_Hhat, delta_Hhatq
  bool use_Mw = false;
  std::optional<PowerSpec> power;
  EstimateOptions options;

  void validate() const;
};

struct CellKey {
  int N = 0;
  int T = 0;
  VectorXd alpha;
  VectorXd d;
  double rho_fw = 0;
  bool use_Mw = false;
};

struct McRow {
  CellKey cell;
  std::string estimator;
  std::string target;
  int coef = 0;        // index into delta
  double mean = 0;     // mean of the estimate
  double bias = 0;     // mean of (estimate - target)
  double sd = 0;       // sd of the estimate
  double mc_se = 0;    // sd of (estimate - target) / sqrt(nrep_effective)
  double size_5pct = 0;    // freq(|estimate/se| > 1.96)
  double q95_abs_t = 0;    // 95% quantile of |estimate/se|
  int nrep_effective = 0;
};

// Replication mean/sd of a pseudo-true parameter component.
struct ParamRow {
  CellKey cell;
  std::string param;  // gamma0, gamma_Hhat, gamma_Hhatq
  int coef = 0;
  double mean = 0;
  double sd = 0;
  int nrep_effective = 0;
};

struct McSummary {
  std::vector<McRow> rows;
  std::vector<ParamRow> params;
  int dropped = 0;
  int total = 0;
};

struct PowerRow {
  CellKey cell;
  std::string estimator;
  int coef = 0;
  double grid_value = 0;
  double reject_raw = 0;       // |t| > 1.96
  double reject_adjusted = 0;  // |t| > under-null 95% quantile
  double crit_value = 0;
  int nrep_effective = 0;
};

bool excessive_drops(int dropped, int total);

// One estimate/target/coefficient row per cell; deterministic given the
// master seed and independent of the thread count.  Replications that fail
// numerically are dropped and counted; a cell with more than 1% drops throws
// excessive_drops_error.
McSummary run_experiment(const ExperimentSpec& spec, int threads = 1);

// Size and size-adjusted power over spec.power->grid for the coefficient
// under test: the DGP moves that component of (gamma0, beta) along the grid,
// and critical values are the under-null (grid value 0) 95% quantiles of |t|.
std::vector<PowerRow> run_power_curve(const ExperimentSpec& spec, int threads = 1);

std::string coef_label(int index, int r, int p);  // gamma1.., w1.., const

}  // namespace wfr
