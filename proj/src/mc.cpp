#include "wfr/mc.hpp"

#include "wfr/bias_correction.hpp"
#include "wfr/dgp.hpp"
#include "wfr/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

namespace wfr {

namespace {

constexpr std::uint64_t kJackknifeSalt = 0x6a6bull;

const std::set<std::string> kEstimators = {"ls", "bcjk", "bcHhatq", "bcHhat"};
const std::set<std::string> kTargets = {"delta0", "delta_Hhat", "delta_Hhatq"};

struct RepRecord {
  bool ok = false;
  std::vector<VectorXd> est;  // one per requested estimator
  VectorXd se;
  VectorXd gamma0, gamma_Hhat, gamma_Hhatq;
  VectorXd beta_target;
};

DgpConfig cell_config(const ExperimentSpec& spec, int size, const Design& design, double rho_fw) {
  DgpConfig cfg = spec.base;
  cfg.N = size;
  cfg.T = size;
  cfg.alpha = design.alpha;
  cfg.d = design.d;
  cfg.rho_fw = rho_fw;
  return cfg;
}

// One replication; rep-indexed streams make the result independent of
// execution order.
RepRecord run_rep(const DgpConfig& cell_cfg, const ExperimentSpec& spec, int rep) {
  RepRecord rec;
  DgpConfig cfg = cell_cfg;
  cfg.seed = mix_seed(spec.base.seed, std::uint64_t(rep));
  EstimateOptions opt = spec.options;
  opt.use_Mw = spec.use_Mw;
  opt.jk_seed = mix_seed(splitmix64(spec.base.seed ^ kJackknifeSalt), std::uint64_t(rep));
  opt.with_jackknife = false;
  for (const auto& e : spec.estimators)
    if (e == "bcjk") opt.with_jackknife = true;

  const Dataset ds = simulate(cfg);
  const EstimateResult res = estimate_all(ds, cfg.r, opt);

  const int q = int(res.fit.delta_hat.size());
  rec.se = VectorXd(q);
  for (int k = 0; k < q; ++k) {
    const double v = res.fit.cov_delta(k, k);
    if (!(v > 0.0)) throw numerical_error("run_rep: nonpositive coefficient variance");
    rec.se(k) = std::sqrt(v);
  }
  rec.est.reserve(spec.estimators.size());
  for (const auto& e : spec.estimators) {
    if (e == "ls") rec.est.push_back(res.bc.delta_hat);
    else if (e == "bcjk") rec.est.push_back(res.bc.delta_bcjk);
    else if (e == "bcHhatq") rec.est.push_back(res.bc.delta_bc_Hhat_q);
    else rec.est.push_back(res.bc.delta_bc_Hhat);
  }
  rec.gamma0 = res.rotations->gamma0;
  rec.gamma_Hhat = res.rotations->gamma_Hhat;
  rec.gamma_Hhatq = res.rotations->gamma_Hhat_q;
  rec.beta_target = *res.beta_target;
  rec.ok = true;
  return rec;
}

// Fills slots[rep] for rep in [0, nrep); drops replications that fail
// numerically.
void run_cell(const DgpConfig& cell_cfg, const ExperimentSpec& spec, int threads,
              std::vector<RepRecord>& slots) {
  const int nrep = spec.nrep;
  slots.assign(nrep, RepRecord{});
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= nrep) return;
      try {
        slots[rep] = run_rep(cell_cfg, spec, rep);
      } catch (const numerical_error& e) {
        std::fprintf(stderr, "replication %d dropped: %s\n", rep, e.what());
        slots[rep].ok = false;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
}

VectorXd target_vector(const RepRecord& rec, const std::string& target) {
  const VectorXd& g = target == "delta0"      ? rec.gamma0
                      : target == "delta_Hhat" ? rec.gamma_Hhat
                                               : rec.gamma_Hhatq;
  VectorXd out(g.size() + rec.beta_target.size());
  out << g, rec.beta_target;
  return out;
}

double quantile95_abs(std::vector<double> v) {
  // Order statistic at ceil(0.95 n): exactly 5% of the sample exceeds it,
  // so using it as a critical value gives 5% under-null rejection.
  std::sort(v.begin(), v.end());
  const int n = int(v.size());
  const int idx = std::max(0, int(std::ceil(0.95 * n)) - 1);
  return v[idx];
}

}  // namespace

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& msg) { throw validation_error("ExperimentSpec: " + msg); };
  if (nrep < 1) fail("nrep must be at least 1");
  if (sizes.empty()) fail("sizes must be nonempty");
  if (designs.empty()) fail("designs must be nonempty");
  if (rho_fw_values.empty()) fail("rho_fw must be nonempty");
  if (estimators.empty()) fail("estimators must be nonempty");
  for (const auto& e : estimators)
    if (!kEstimators.count(e)) fail("unknown estimator '" + e + "'");
  for (const auto& t : targets)
    if (!kTargets.count(t)) fail("unknown target '" + t + "'");
  if (power) {
    if (power->grid.empty()) fail("power grid must be nonempty");
    if (power->coef < 0 || power->coef >= base.r + base.p)
      fail("power coefficient index out of range");
  }
  for (const auto& design : designs) {
    DgpConfig cfg = cell_config(*this, sizes.front(), design, rho_fw_values.front());
    cfg.validate();  // per-design validity, including the lambda ordering
  }
}

bool excessive_drops(int dropped, int total) { return dropped * 100 > total; }

McSummary run_experiment(const ExperimentSpec& spec, int threads) {
  spec.validate();
  McSummary summary;
  std::vector<RepRecord> slots;
  for (int size : spec.sizes) {
    for (const auto& design : spec.designs) {
      for (double rho_fw : spec.rho_fw_values) {
        const DgpConfig cfg = cell_config(spec, size, design, rho_fw);
        run_cell(cfg, spec, threads, slots);

        CellKey cell{cfg.N, cfg.T, cfg.alpha, cfg.d, rho_fw, spec.use_Mw};
        int used = 0;
        for (const auto& s : slots) used += s.ok;
        summary.total += spec.nrep;
        summary.dropped += spec.nrep - used;
        if (used == 0 || excessive_drops(spec.nrep - used, spec.nrep))
          throw excessive_drops_error("run_experiment: more than 1% of replications dropped");

        const int q = cfg.r + cfg.p;
        for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei) {
          for (int k = 0; k < q; ++k) {
            // Size and |t| quantile of the significance test, shared across
            // targets.
            std::vector<double> abs_t;
            abs_t.reserve(used);
            double mean_est = 0, m2_est = 0;
            int n = 0;
            for (const auto& s : slots) {
              if (!s.ok) continue;
              const double est = s.est[ei](k);
              ++n;
              const double d1 = est - mean_est;
              mean_est += d1 / n;
              m2_est += d1 * (est - mean_est);
              abs_t.push_back(std::abs(est / s.se(k)));
            }
            const double sd_est = n > 1 ? std::sqrt(m2_est / (n - 1)) : 0.0;
            int rejections = 0;
            for (double t : abs_t) rejections += t > 1.96;

            for (const auto& target : spec.targets) {
              McRow row;
              row.cell = cell;
              row.estimator = spec.estimators[ei];
              row.target = target;
              row.coef = k;
              row.mean = mean_est;
              row.sd = sd_est;
              row.size_5pct = double(rejections) / used;
              row.q95_abs_t = quantile95_abs(abs_t);
              row.nrep_effective = used;
              double mean_diff = 0, m2_diff = 0;
              int m = 0;
              for (const auto& s : slots) {
                if (!s.ok) continue;
                const double diff = s.est[ei](k) - target_vector(s, target)(k);
                ++m;
                const double d1 = diff - mean_diff;
                mean_diff += d1 / m;
                m2_diff += d1 * (diff - mean_diff);
              }
              row.bias = mean_diff;
              row.mc_se = m > 1 ? std::sqrt(m2_diff / (m - 1)) / std::sqrt(double(m)) : 0.0;
              summary.rows.push_back(std::move(row));
            }
          }
        }

        const char* params[] = {"gamma0", "gamma_Hhat", "gamma_Hhatq"};
        for (const char* param : params) {
          for (int k = 0; k < cfg.r; ++k) {
            double mean = 0, m2 = 0;
            int n = 0;
            for (const auto& s : slots) {
              if (!s.ok) continue;
              const VectorXd& g = std::string(param) == "gamma0"      ? s.gamma0
                                  : std::string(param) == "gamma_Hhat" ? s.gamma_Hhat
                                                                       : s.gamma_Hhatq;
              ++n;
              const double d1 = g(k) - mean;
              mean += d1 / n;
              m2 += d1 * (g(k) - mean);
            }
            ParamRow row;
            row.cell = cell;
            row.param = param;
            row.coef = k;
            row.mean = mean;
            row.sd = n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0;
            row.nrep_effective = n;
            summary.params.push_back(std::move(row));
          }
        }
      }
    }
  }
  return summary;
}

std::vector<PowerRow> run_power_curve(const ExperimentSpec& spec, int threads) {
  spec.validate();
  if (!spec.power) throw validation_error("run_power_curve: spec has no power grid");
  const int coef = spec.power->coef;

  std::vector<double> grid = spec.power->grid;
  const bool has_null = std::any_of(grid.begin(), grid.end(), [](double g) { return g == 0.0; });
  if (!has_null) grid.insert(grid.begin(), 0.0);  // critical values need the null

  std::vector<PowerRow> rows;
  std::vector<RepRecord> slots;
  for (int size : spec.sizes) {
    for (const auto& design : spec.designs) {
      for (double rho_fw : spec.rho_fw_values) {
        // absolute t per estimator per grid value
        std::vector<std::vector<std::vector<double>>> abs_t(grid.size());
        std::vector<int> used(grid.size(), 0);
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
          ExperimentSpec moved = spec;
          if (coef < spec.base.r)
            moved.base.gamma0(coef) = grid[gi];
          else
            moved.base.beta(coef - spec.base.r) = grid[gi];
          const DgpConfig cfg = cell_config(moved, size, design, rho_fw);
          run_cell(cfg, moved, threads, slots);
          abs_t[gi].assign(spec.estimators.size(), {});
          for (const auto& s : slots) {
            if (!s.ok) continue;
            ++used[gi];
            for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei)
              abs_t[gi][ei].push_back(std::abs(s.est[ei](coef) / s.se(coef)));
          }
          if (used[gi] == 0 || excessive_drops(spec.nrep - used[gi], spec.nrep))
            throw excessive_drops_error("run_power_curve: more than 1% of replications dropped");
        }

        std::size_t null_gi = 0;
        while (grid[null_gi] != 0.0) ++null_gi;
        for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei) {
          const double crit = quantile95_abs(abs_t[null_gi][ei]);
          for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            if (!has_null && gi == null_gi) continue;  // implicit null not reported
            PowerRow row;
            row.cell = CellKey{size, size, design.alpha, design.d, rho_fw, spec.use_Mw};
            row.estimator = spec.estimators[ei];
            row.coef = coef;
            row.grid_value = grid[gi];
            int raw = 0, adj = 0;
            for (double t : abs_t[gi][ei]) {
              raw += t > 1.96;
              adj += t > crit;
            }
            row.reject_raw = double(raw) / used[gi];
            row.reject_adjusted = double(adj) / used[gi];
            row.crit_value = crit;
            row.nrep_effective = used[gi];
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

std::string coef_label(int index, int r, int p) {
  if (index < r) return "gamma" + std::to_string(index + 1);
  if (index < r + p - 1) return "w" + std::to_string(index - r + 1);
  (void)p;
  return "const";
}

}  // namespace wfr
