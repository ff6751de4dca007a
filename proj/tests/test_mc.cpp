#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wfr/mc.hpp"

#include <cmath>
#include <string>

using namespace wfr;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.base.r = 2;
  spec.base.p = 2;
  spec.base.H = MatrixXd(2, 2);
  spec.base.H << 1.0, 0.5, 0.5, 2.0;
  spec.base.rho_e = 0.2;
  spec.base.sigma_e = 0.5;
  spec.base.theta = 0.5;
  spec.base.s_order = 2;
  spec.base.sigma_w = 1.0;
  spec.base.sigma_eps = std::sqrt(0.5);
  spec.base.gamma0 = VectorXd::Ones(2);
  spec.base.beta = VectorXd::Ones(2);
  spec.base.seed = 20240101;
  spec.sizes = {30};
  Design d;
  d.alpha = VectorXd(2);
  d.alpha << 1.0, 0.8;
  d.d = VectorXd(2);
  d.d << 0.2, 0.2;
  spec.designs = {d};
  spec.rho_fw_values = {0.6};
  spec.nrep = 20;
  spec.estimators = {"ls", "bcjk"};
  spec.targets = {"delta0", "delta_Hhatq"};
  spec.options.jk_R = 10;
  return spec;
}

const McRow& find_row(const McSummary& s, const std::string& est, const std::string& target,
                      int coef) {
  for (const auto& row : s.rows)
    if (row.estimator == est && row.target == target && row.coef == coef) return row;
  REQUIRE(false);
  return s.rows.front();
}

}  // namespace

TEST_CASE("experiment runs are deterministic") {
  const ExperimentSpec spec = tiny_spec();
  const McSummary a = run_experiment(spec, 1);
  const McSummary b = run_experiment(spec, 1);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean == b.rows[i].mean);
    CHECK(a.rows[i].bias == b.rows[i].bias);
    CHECK(a.rows[i].sd == b.rows[i].sd);
    CHECK(a.rows[i].size_5pct == b.rows[i].size_5pct);
    CHECK(a.rows[i].q95_abs_t == b.rows[i].q95_abs_t);
  }
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK(a.params[i].mean == b.params[i].mean);
    CHECK(a.params[i].sd == b.params[i].sd);
  }

  ExperimentSpec other = spec;
  other.base.seed += 1;
  const McSummary c = run_experiment(other, 1);
  CHECK(a.rows.front().mean != c.rows.front().mean);
}

TEST_CASE("results are independent of the thread count") {
  const ExperimentSpec spec = tiny_spec();
  const McSummary a = run_experiment(spec, 1);
  const McSummary b = run_experiment(spec, 2);
  const McSummary c = run_experiment(spec, 4);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean == b.rows[i].mean);
    CHECK(a.rows[i].mean == c.rows[i].mean);
    CHECK(a.rows[i].q95_abs_t == b.rows[i].q95_abs_t);
    CHECK(a.rows[i].q95_abs_t == c.rows[i].q95_abs_t);
  }
}

TEST_CASE("summary layout covers every cell, estimator, target and coefficient") {
  ExperimentSpec spec = tiny_spec();
  spec.sizes = {30, 40};
  spec.rho_fw_values = {0.0, 0.6};
  spec.nrep = 5;
  spec.estimators = {"ls"};
  spec.options.with_jackknife = false;
  const McSummary s = run_experiment(spec, 2);
  // cells(4) x estimators(1) x targets(2) x coefficients(4)
  CHECK(s.rows.size() == 4u * 1u * 2u * 4u);
  // cells(4) x params(3) x r(2)
  CHECK(s.params.size() == 4u * 3u * 2u);
  CHECK(s.total == 4 * 5);
  CHECK(s.dropped == 0);
  for (const auto& row : s.rows) CHECK(row.nrep_effective == 5);
}

TEST_CASE("true null coefficient rejects at the nominal rate") {
  ExperimentSpec spec = tiny_spec();
  spec.base.beta(0) = 0.0;  // w1 enters with a zero coefficient
  spec.base.rho_fw = 0.0;
  spec.rho_fw_values = {0.0};
  Design strong;
  strong.alpha = VectorXd::Ones(2);
  strong.d = VectorXd(2);
  strong.d << 0.2, 0.1;
  spec.designs = {strong};
  spec.sizes = {50};
  spec.nrep = 400;
  spec.estimators = {"ls"};
  spec.targets = {"delta0"};

  const McSummary s = run_experiment(spec, 2);
  const McRow& row = find_row(s, "ls", "delta0", 2);
  // Uncorrelated regressor with a zero coefficient: the t-test should be
  // close to nominal size.  Band is about 4 binomial sd at nrep=400 plus
  // finite-sample slack.
  CHECK(row.size_5pct > 0.005);
  CHECK(row.size_5pct < 0.12);
  CHECK(std::abs(row.mean) < 5.0 * row.sd / std::sqrt(400.0));
  CHECK(row.q95_abs_t > 1.6);
  CHECK(row.q95_abs_t < 2.6);
}

TEST_CASE("ls bias toward the Hhat_q target is smaller than toward the Hhat target") {
  ExperimentSpec spec = tiny_spec();
  spec.sizes = {50};
  spec.nrep = 200;
  spec.estimators = {"ls"};
  spec.targets = {"delta_Hhat", "delta_Hhatq"};
  const McSummary s = run_experiment(spec, 2);
  const McRow& vs_H = find_row(s, "ls", "delta_Hhat", 1);
  const McRow& vs_q = find_row(s, "ls", "delta_Hhatq", 1);
  CHECK(std::abs(vs_q.bias) < std::abs(vs_H.bias));
}

TEST_CASE("drop accounting is a pure threshold rule") {
  CHECK_FALSE(excessive_drops(0, 100));
  CHECK_FALSE(excessive_drops(1, 100));
  CHECK(excessive_drops(2, 100));
  CHECK_FALSE(excessive_drops(10, 1000));
  CHECK(excessive_drops(11, 1000));
  CHECK(excessive_drops(1, 10));
}

TEST_CASE("spec validation names bad entries") {
  ExperimentSpec spec = tiny_spec();
  spec.estimators = {"ls", "oracle"};
  try {
    spec.validate();
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("oracle") != std::string::npos);
  }

  spec = tiny_spec();
  spec.designs[0].d << 0.05, 0.2;  // implied eigenvalues increase
  CHECK_THROWS_AS(spec.validate(), validation_error);

  spec = tiny_spec();
  spec.nrep = 0;
  CHECK_THROWS_AS(spec.validate(), validation_error);

  spec = tiny_spec();
  CHECK_THROWS_AS(run_power_curve(spec, 1), validation_error);  // no power block
}

TEST_CASE("power curve is exact at the null and increases along the grid") {
  ExperimentSpec spec = tiny_spec();
  spec.sizes = {40};
  spec.nrep = 200;
  spec.estimators = {"ls"};
  spec.base.gamma0(1) = 0.0;
  Design strong;
  strong.alpha = VectorXd::Ones(2);
  strong.d = VectorXd(2);
  strong.d << 0.2, 0.1;
  spec.designs = {strong};
  spec.rho_fw_values = {0.0};
  PowerSpec pw;
  pw.coef = 1;  // gamma2
  pw.grid = {0.0, 0.6};
  spec.power = pw;

  const std::vector<PowerRow> rows = run_power_curve(spec, 2);
  REQUIRE(rows.size() == 2);

  const PowerRow& at_null = rows[0].grid_value == 0.0 ? rows[0] : rows[1];
  const PowerRow& at_alt = rows[0].grid_value == 0.0 ? rows[1] : rows[0];
  // Size-adjusted rejection at the null is fixed by the order statistic:
  // strictly-above count is nrep - ceil(0.95 nrep).
  CHECK(at_null.reject_adjusted == doctest::Approx(10.0 / 200.0));
  CHECK(at_alt.reject_adjusted > at_null.reject_adjusted + 0.2);
  CHECK(at_alt.reject_raw > 0.3);
  CHECK(at_null.crit_value == at_alt.crit_value);
  CHECK(at_null.nrep_effective == 200);
}
