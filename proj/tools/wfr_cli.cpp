#include "wfr/bias_correction.hpp"
#include "wfr/dgp.hpp"
#include "wfr/io.hpp"
#include "wfr/mc.hpp"
#include "wfr/regression.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wfr;

namespace {

struct EstimateArgs {
  std::string data;
  int r = 0;
  int horizon = 0;
  bool no_intercept = false;
  bool use_mw = false;
  std::string cov = "hac";  // empirical path default; the MC harness uses hetero
  int hac_bw = -1;
  double poet_c = 0.5;
  bool poet_soft = false;
  int jk_R = 100;
  std::uint64_t seed = 1;
  std::string corrections = "ls,bcjk,bcHhatq,bcHhat";
  bool test_equal = false;
  std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

CovKind parse_cov(const std::string& s) {
  if (s == "homo") return CovKind::homoskedastic;
  if (s == "hetero") return CovKind::heteroskedastic;
  if (s == "hac") return CovKind::hac;
  throw validation_error("--cov must be homo, hetero or hac");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const std::string config_bytes = read_file(config_path);
  const DgpConfig cfg = parse_dgp_config(config_bytes);
  const Dataset ds = simulate(cfg);
  write_dataset(ds, out_dir, &cfg);
  write_file(fs::path(out_dir) / "manifest.json", manifest_json("simulate", config_bytes, cfg.seed));
  std::printf("simulate: wrote T=%d N=%d p=%d dataset to %s\n", cfg.T, cfg.N, cfg.p,
              out_dir.c_str());
  return 0;
}

int cmd_estimate(const EstimateArgs& a) {
  Dataset ds = load_dataset(a.data);
  const int T_raw = int(ds.y.size());

  if (a.horizon < 0) throw validation_error("--horizon must be nonnegative");
  const int T = T_raw - a.horizon;
  if (!a.no_intercept || a.horizon > 0) ds.truth.reset();  // rows/columns no longer match
  if (a.horizon > 0) {
    if (T < 1)
      throw validation_error("horizon " + std::to_string(a.horizon) + " leaves no rows of " +
                             std::to_string(T_raw));
    ds.y = VectorXd(ds.y.tail(T));
    ds.X = MatrixXd(ds.X.topRows(T));
    ds.W = MatrixXd(ds.W.topRows(T));
  }
  if (!a.no_intercept) {
    MatrixXd W(T, ds.W.cols() + 1);
    W << ds.W, VectorXd::Ones(T);
    ds.W = std::move(W);
  }
  const int p = int(ds.W.cols());
  if (a.r < 1) throw validation_error("--r must be at least 1");
  if (T <= a.r + p)
    throw validation_error("insufficient rows: T=" + std::to_string(T) + " after shift, need > " +
                           std::to_string(a.r + p));
  if (a.r > std::min<int>(T, int(ds.X.cols())))
    throw validation_error("--r exceeds min(T, N)");

  const std::vector<std::string> wanted = split_list(a.corrections);
  for (const auto& w : wanted)
    if (w != "ls" && w != "bcjk" && w != "bcHhatq" && w != "bcHhat")
      throw validation_error("unknown correction '" + w + "'");

  EstimateOptions opt;
  opt.poet.threshold_const = a.poet_c;
  opt.poet.kind = a.poet_soft ? ThresholdKind::soft : ThresholdKind::hard;
  opt.use_Mw = a.use_mw;
  opt.cov_kind = parse_cov(a.cov);
  opt.hac_bandwidth = a.hac_bw;
  opt.jk_R = a.jk_R;
  opt.jk_seed = a.seed;
  opt.with_jackknife = false;
  for (const auto& w : wanted) opt.with_jackknife |= w == "bcjk";

  const EstimateResult res = estimate_all(ds, a.r, opt);

  const int q = a.r + p;
  VectorXd se(q);
  for (int k = 0; k < q; ++k) {
    const double v = res.fit.cov_delta(k, k);
    if (!(v > 0.0)) throw numerical_error("nonpositive coefficient variance");
    se(k) = std::sqrt(v);
  }
  auto pick = [&](const std::string& name) -> const VectorXd& {
    if (name == "ls") return res.bc.delta_hat;
    if (name == "bcjk") return res.bc.delta_bcjk;
    if (name == "bcHhatq") return res.bc.delta_bc_Hhat_q;
    return res.bc.delta_bc_Hhat;
  };

  if (a.cov == "hac")
    std::printf("estimates (cov=hac, bandwidth=%d)\n\n", res.fit.hac_bandwidth);
  else
    std::printf("estimates (cov=%s)\n\n", a.cov.c_str());
  std::printf("%-10s %-8s %12s %12s %9s\n", "estimator", "coef", "estimate", "se", "t");
  std::string csv = "estimator,coef,estimate,se,t\r\n";
  for (const auto& name : wanted) {
    const VectorXd& est = pick(name);
    for (int k = 0; k < q; ++k) {
      const std::string label = coef_label(k, a.r, p);
      const double t = est(k) / se(k);
      std::printf("%-10s %-8s %12s %12s %9s\n", name.c_str(), label.c_str(),
                  format_sig6(est(k)).c_str(), format_sig6(se(k)).c_str(),
                  format_sig6(t).c_str());
      csv += name + "," + label + "," + format_full(est(k)) + "," + format_full(se(k)) + "," +
             format_full(t) + "\r\n";
    }
  }

  if (a.test_equal) {
    if (a.r < 2) throw validation_error("--test-equal needs at least two factors");
    VectorXd c = VectorXd::Zero(q);
    c(0) = 1;
    c(1) = -1;
    const TestResult tr = wald_linear(res.fit, c, 0.0);
    std::printf("\nH0 gamma1 = gamma2: t = %s, %s at 5%%\n", format_sig6(tr.t_stat).c_str(),
                tr.reject_5pct ? "rejected" : "not rejected");
  }

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "estimates.csv", csv);
    std::ostringstream flags;
    flags << "data=" << a.data << " r=" << a.r << " horizon=" << a.horizon
          << " no_intercept=" << a.no_intercept << " use_mw=" << a.use_mw << " cov=" << a.cov
          << " hac_bw=" << a.hac_bw << " poet_c=" << format_full(a.poet_c)
          << " poet_soft=" << a.poet_soft << " jk_R=" << a.jk_R << " seed=" << a.seed
          << " corrections=" << a.corrections;
    write_file(fs::path(a.out) / "manifest.json", manifest_json("estimate", flags.str(), a.seed));
  }
  return 0;
}

int cmd_mc(const std::string& spec_path, const std::string& out_dir, int threads) {
  if (threads < 1) throw validation_error("--threads must be at least 1");
  const std::string spec_bytes = read_file(spec_path);
  const ExperimentSpec spec = parse_experiment_spec(spec_bytes);
  fs::create_directories(out_dir);

  const McSummary summary = run_experiment(spec, threads);
  write_summary_csv(summary, fs::path(out_dir) / "summary.csv");
  if (spec.power) {
    const std::vector<PowerRow> rows = run_power_curve(spec, threads);
    write_power_csv(rows, fs::path(out_dir) / "power.csv");
  }
  write_file(fs::path(out_dir) / "manifest.json", manifest_json("mc", spec_bytes, spec.base.seed));
  std::printf("mc: %zu rows, %d of %d replications dropped, wrote %s\n", summary.rows.size(),
              summary.dropped, summary.total, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factor-augmented regression with weak factors: simulate, estimate, mc"};
  app.require_subcommand(1);

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "generate a dataset from a JSON design config");
  sim->add_option("--config", sim_config, "design config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "estimate a factor-augmented regression from CSVs");
  est->add_option("--data", ea.data, "directory with X.csv and yW.csv")->required();
  est->add_option("--r", ea.r, "number of factors")->required();
  est->add_option("--horizon", ea.horizon, "pair y_{t+h} with period-t regressors (default 0)");
  est->add_flag("--no-intercept", ea.no_intercept, "do not append a ones column to W");
  est->add_flag("--use-mw", ea.use_mw, "project X off W before factor extraction");
  est->add_option("--cov", ea.cov, "homo, hetero or hac (default hac)");
  est->add_option("--hac-bw", ea.hac_bw, "HAC bandwidth, -1 selects floor(T^(1/4))");
  est->add_option("--poet-c", ea.poet_c, "POET threshold constant (default 0.5)");
  est->add_flag("--poet-soft", ea.poet_soft, "soft thresholding instead of hard");
  est->add_option("--jk-R", ea.jk_R, "jackknife split count (default 100)");
  est->add_option("--seed", ea.seed, "jackknife split seed (default 1)");
  est->add_option("--corrections", ea.corrections, "comma list of ls,bcjk,bcHhatq,bcHhat");
  est->add_flag("--test-equal", ea.test_equal, "t-test of gamma1 = gamma2");
  est->add_option("--out", ea.out, "directory for estimates.csv and manifest.json");

  std::string mc_spec, mc_out;
  int mc_threads = 1;
  auto* mc = app.add_subcommand("mc", "run a Monte Carlo experiment from a JSON spec");
  mc->add_option("--spec", mc_spec, "experiment spec JSON")->required();
  mc->add_option("--out", mc_out, "output directory")->required();
  mc->add_option("--threads", mc_threads, "worker threads (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out);
    if (est->parsed()) return cmd_estimate(ea);
    return cmd_mc(mc_spec, mc_out, mc_threads);
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const excessive_drops_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
