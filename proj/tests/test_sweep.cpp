#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dynsync/errors.hpp"
#include "dynsync/metrics.hpp"
#include "dynsync/sweep.hpp"
#include "dynsync/synthgen.hpp"

using namespace dynsync;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.model = Model::agn;
  cfg.n = 4;
  cfg.T_list = {3, 4};
  cfg.st = StRule{StRule::Kind::constant, 1.0};
  cfg.sigma = 1.0;
  cfg.estimators = {"ltrs-gs", "naive-spectral"};
  cfg.mc_runs = 2;
  cfg.seed = 7;
  return cfg;
}

std::string csv_of(const ExperimentConfig& cfg, const std::vector<RunRecord>& recs) {
  std::ostringstream os;
  write_records_csv(os, cfg, "sweep-t", recs);
  return os.str();
}

}  // namespace

TEST_CASE("smoothness rules parse, evaluate, and print") {
  StRule c = StRule::parse("2.5");
  CHECK(c.kind == StRule::Kind::constant);
  CHECK(c.eval(10) == 2.5);
  CHECK(c.eval(100) == 2.5);
  CHECK(c.str() == "2.5");

  StRule inv = StRule::parse("1/T");
  CHECK(inv.kind == StRule::Kind::inv_t);
  CHECK(inv.eval(10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(inv.str() == "1/T");

  for (const char* s : {"T^1/4", "T^(1/4)", "T^0.25"}) {
    StRule root = StRule::parse(s);
    CHECK(root.kind == StRule::Kind::fourth_root);
    CHECK(root.eval(16) == doctest::Approx(2.0).epsilon(1e-15));
  }

  CHECK(StRule::parse("0").eval(50) == 0.0);
  CHECK_THROWS_AS(StRule::parse("-1"), ValidationError);
  CHECK_THROWS_AS(StRule::parse("T^2"), ValidationError);
  CHECK_THROWS_AS(StRule::parse("bogus"), ValidationError);
  CHECK_THROWS_AS(StRule::parse(""), ValidationError);
}

TEST_CASE("model and selection names round-trip") {
  CHECK(parse_model("agn") == Model::agn);
  CHECK(parse_model("outliers") == Model::outliers);
  CHECK(std::string(to_string(Model::agn)) == "agn");
  CHECK_THROWS_AS(parse_model("gaussian"), ValidationError);

  CHECK(parse_selection("auto") == SelectionMode::auto_rule);
  CHECK(parse_selection("fixed-tau") == SelectionMode::fixed_tau);
  CHECK(parse_selection("fixed-lambda") == SelectionMode::fixed_lambda);
  CHECK(parse_selection("oracle-tau") == SelectionMode::oracle_tau);
  CHECK(std::string(to_string(SelectionMode::oracle_tau)) == "oracle-tau");
  CHECK_THROWS_AS(parse_selection("best"), ValidationError);
}

TEST_CASE("estimator roster and kind predicate") {
  for (const char* name : {"gtrs", "ltrs-gs", "gmd-ltrs", "gmd-spectral", "ppm",
                           "naive-spectral"}) {
    CHECK(std::count(kEstimatorNames.begin(), kEstimatorNames.end(), name) == 1);
  }
  CHECK(is_tau_estimator("ltrs-gs"));
  CHECK(is_tau_estimator("gmd-ltrs"));
  CHECK(is_tau_estimator("gmd-spectral"));
  CHECK_FALSE(is_tau_estimator("gtrs"));
  CHECK_FALSE(is_tau_estimator("ppm"));
  CHECK_FALSE(is_tau_estimator("naive-spectral"));
}

TEST_CASE("run seeds separate cells and repetitions") {
  std::set<std::uint64_t> seen;
  for (int T : {10, 20})
    for (double gamma : {0.5, 3.0})
      for (int mc = 0; mc < 5; ++mc) seen.insert(run_seed_for(1, T, gamma, mc));
  CHECK(seen.size() == 20);
  CHECK(run_seed_for(1, 10, 0.5, 0) == run_seed_for(1, 10, 0.5, 0));
  CHECK(run_seed_for(1, 10, 0.5, 0) != run_seed_for(2, 10, 0.5, 0));
}

TEST_CASE("config validation rejects bad settings") {
  ExperimentConfig cfg = tiny_config();
  cfg.n = 1;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.T_list = {};
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.T_list = {0};
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.mc_runs = 0;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.estimators = {"magic"};
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.estimators = {};
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.sigma = -1.0;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.eta = 1.5;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.p = 1.5;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.lambda_scale = 0.0;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.ppm_inits = {"ppm"};
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  cfg = tiny_config();
  cfg.threads = 0;
  CHECK_THROWS_AS(cfg.validate_common(), ValidationError);

  tiny_config().validate_common();  // the baseline itself is fine
}

TEST_CASE("selection bridge for the passthrough estimator") {
  ExperimentConfig cfg = tiny_config();
  StackedSignal g = generate_smooth_truth({cfg.n, 3, 1.0}, 11);
  MeasurementStack A = generate_agn(g, {1.0}, 11);
  SelectedEstimate sel = estimate_with_selection(A, "naive-spectral", cfg, 1.0);
  CHECK(sel.beta == 0.0);
  CHECK(sel.tau == 0.0);
  CHECK(sel.lambda == 0.0);
  CHECK(sel.fidelity_curve.empty());
  CHECK(sel.estimate.T() == 3);
}

TEST_CASE("fixed-order selection pins beta, tau, and lambda together") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection = SelectionMode::fixed_tau;
  cfg.fixed_tau = 3;
  StackedSignal g = generate_smooth_truth({cfg.n, 4, 1.0}, 12);
  MeasurementStack A = generate_agn(g, {1.0}, 12);

  SelectedEstimate sel = estimate_with_selection(A, "ltrs-gs", cfg, 1.0);
  CHECK(sel.beta == 2.0);  // tau = floor(beta) + 1
  CHECK(sel.tau == 3.0);
  CHECK(sel.fidelity_curve.empty());

  SelectedEstimate gl = estimate_with_selection(A, "gtrs", cfg, 1.0);
  CHECK(gl.beta == 2.0);
  CHECK(gl.lambda == 20.0);  // lambda_scale * beta
}

TEST_CASE("fixed-penalty selection converts through the same bridge") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection = SelectionMode::fixed_lambda;
  cfg.fixed_lambda = 25.0;
  StackedSignal g = generate_smooth_truth({cfg.n, 4, 1.0}, 13);
  MeasurementStack A = generate_agn(g, {1.0}, 13);
  SelectedEstimate sel = estimate_with_selection(A, "gtrs", cfg, 1.0);
  CHECK(sel.beta == 2.5);  // lambda / lambda_scale
  CHECK(sel.lambda == 25.0);
  SelectedEstimate tl = estimate_with_selection(A, "gmd-ltrs", cfg, 1.0);
  CHECK(tl.tau == 3.0);  // floor(2.5) + 1
}

TEST_CASE("oracle selection uses the theoretical balancing order") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection = SelectionMode::oracle_tau;
  cfg.n = 30;
  cfg.T_list = {20};
  cfg.st = StRule::parse("0.05");
  StackedSignal g = generate_smooth_truth({30, 20, 0.05}, 14);
  MeasurementStack A = generate_agn(g, {3.0}, 14);
  SelectedEstimate sel = estimate_with_selection(A, "gmd-ltrs", cfg, 3.0);
  CHECK(int(sel.tau) == tau_star_agn(30, 20, 0.05, 3.0));
  CHECK(sel.tau == 1.0);
}

TEST_CASE("auto selection walks the grid and reports the curve") {
  ExperimentConfig cfg = tiny_config();
  StackedSignal g = generate_smooth_truth({cfg.n, 4, 1.0}, 15);
  MeasurementStack A = generate_agn(g, {0.5}, 15);
  SelectedEstimate sel =
      estimate_with_selection(A, "ltrs-gs", cfg, 0.5, {}, nullptr, 1, &g);
  const std::size_t points = build_beta_grid(4).betas.size();
  CHECK(sel.grid.betas.size() == points);
  CHECK(sel.fidelity_curve.size() == points);
  CHECK(sel.rmse_curve.size() == points);
  // the reported pair comes from one grid point
  bool found = false;
  for (std::size_t i = 0; i < points; ++i)
    if (sel.grid.betas[i] == sel.beta && sel.fidelity_curve[i] == sel.fidelity)
      found = true;
  CHECK(found);
  CHECK(sel.tau == double(tau_for_beta(sel.beta, 4)));
}

TEST_CASE("refinement rows need an initializer") {
  ExperimentConfig cfg = tiny_config();
  StackedSignal g = generate_smooth_truth({cfg.n, 3, 1.0}, 16);
  MeasurementStack A = generate_agn(g, {1.0}, 16);
  CHECK_THROWS_AS(estimate_with_selection(A, "ppm", cfg, 1.0), ValidationError);
  CHECK_THROWS_AS(estimate_with_selection(A, "psychic", cfg, 1.0), ValidationError);
}

TEST_CASE("horizon sweep emits runs plus two aggregate rows per cell") {
  ExperimentConfig cfg = tiny_config();
  std::vector<RunRecord> recs = run_sweep_T(cfg);
  // 2 horizons x 2 estimators x (2 runs + mean + std)
  REQUIRE(recs.size() == 16);

  int runs = 0, means = 0, stds = 0;
  for (const RunRecord& r : recs) {
    if (r.kind == "run") ++runs;
    if (r.kind == "mean") ++means;
    if (r.kind == "std") ++stds;
    CHECK((r.T == 3 || r.T == 4));
    CHECK(r.gamma == 1.0);
    CHECK((r.estimator == "ltrs-gs" || r.estimator == "naive-spectral"));
  }
  CHECK(runs == 8);
  CHECK(means == 4);
  CHECK(stds == 4);

  for (const RunRecord& r : recs) {
    if (r.kind == "run") {
      CHECK(r.status == "ok");
      CHECK((r.mc_index == 0 || r.mc_index == 1));
      CHECK(r.run_seed == run_seed_for(cfg.seed, r.T, r.gamma, r.mc_index));
      CHECK(std::isfinite(r.rmse_val));
    } else {
      CHECK(r.mc_index == -1);
      CHECK(r.status == "ok:2/2");
    }
  }
}

TEST_CASE("aggregates are the sample statistics of their runs") {
  ExperimentConfig cfg = tiny_config();
  cfg.T_list = {4};
  cfg.estimators = {"ltrs-gs"};
  cfg.mc_runs = 3;
  std::vector<RunRecord> recs = run_sweep_T(cfg);
  REQUIRE(recs.size() == 5);
  const double m = (recs[0].rmse_val + recs[1].rmse_val + recs[2].rmse_val) / 3.0;
  CHECK(recs[3].kind == "mean");
  CHECK(recs[3].rmse_val == doctest::Approx(m).epsilon(1e-14));
  double ss = 0;
  for (int i = 0; i < 3; ++i) ss += std::pow(recs[i].rmse_val - m, 2);
  CHECK(recs[4].kind == "std");
  CHECK(recs[4].rmse_val == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-12));
}

TEST_CASE("noise sweep varies gamma over a single horizon") {
  ExperimentConfig cfg = tiny_config();
  cfg.T_list = {3};
  cfg.estimators = {"naive-spectral"};
  cfg.noise_grid = {0.5, 2.0};
  std::vector<RunRecord> recs = run_sweep_noise(cfg);
  REQUIRE(recs.size() == 8);
  CHECK(recs[0].gamma == 0.5);
  CHECK(recs[4].gamma == 2.0);
  for (const RunRecord& r : recs) CHECK(r.T == 3);

  cfg.T_list = {3, 4};
  CHECK_THROWS_AS(run_sweep_noise(cfg), ValidationError);
  cfg.T_list = {3};
  cfg.noise_grid = {};
  CHECK_THROWS_AS(run_sweep_noise(cfg), ValidationError);
}

TEST_CASE("sweep output is deterministic, including across thread counts") {
  ExperimentConfig cfg = tiny_config();
  const std::string once = csv_of(cfg, run_sweep_T(cfg));
  const std::string again = csv_of(cfg, run_sweep_T(cfg));
  CHECK(once == again);

  ExperimentConfig threaded = cfg;
  threaded.threads = 2;
  const std::string parallel = csv_of(threaded, run_sweep_T(threaded));
  CHECK(once == parallel);
  CHECK(once.find("failed") == std::string::npos);
}

TEST_CASE("record layout of the serialized sweep") {
  ExperimentConfig cfg = tiny_config();
  cfg.T_list = {3};
  cfg.estimators = {"naive-spectral"};
  cfg.mc_runs = 1;
  const std::string csv = csv_of(cfg, run_sweep_T(cfg));

  CHECK(csv.find("# command=sweep-t\n") != std::string::npos);
  CHECK(csv.find("# model=agn\n") != std::string::npos);
  CHECK(csv.find("# n=4\n") != std::string::npos);
  CHECK(csv.find("# st=1\n") != std::string::npos);
  CHECK(csv.find("kind,estimator,init,T,gamma,mc,seed,beta,tau,lambda,fidelity,"
                 "rmse,seed_rmse,status") != std::string::npos);
  CHECK(csv.find("# threads") == std::string::npos);

  std::istringstream is(csv);
  std::string line;
  int data_lines = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
    CHECK(std::count(line.begin(), line.end(), ',') == 13);
    ++data_lines;
  }
  CHECK(data_lines == 3);
}
