// command line front end: data generation, single estimates, and the
// sweep/benchmark experiments, all on the shared text formats

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynsync/errors.hpp"
#include "dynsync/metrics.hpp"
#include "dynsync/selection.hpp"
#include "dynsync/selfcheck.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/signal_io.hpp"
#include "dynsync/sweep.hpp"
#include "dynsync/synthgen.hpp"

namespace {

using namespace dynsync;

struct CommonOpts {
  std::string model = "agn";
  int n = 30;
  std::vector<int> t_list = {10, 20, 40, 70, 100};
  std::string st = "1/T";
  std::vector<double> sigma = {3.0};
  std::vector<double> eta = {0.2};
  double p = 1.0;
  std::vector<std::string> estimators = {"gtrs", "ltrs-gs", "gmd-ltrs",
                                         "naive-spectral"};
  int runs = 20;
  std::uint64_t seed = 1;
  double lambda_scale = 10.0;
  std::string selection = "auto";
  double tau = 1.0;
  double lambda = 0.0;
  double delta = 0.1;
  double mu_gap = 1.0;
  int ppm_iters = 50;
  std::vector<std::string> ppm_inits = {"gtrs", "gmd-ltrs", "ltrs-gs",
                                        "naive-spectral"};
  int threads = 1;
  std::string out;
};

void add_model_options(CLI::App* c, CommonOpts& o) {
  c->add_option("--model", o.model, "measurement model: agn|outliers")
      ->capture_default_str();
  c->add_option("--n", o.n, "group size per time step")->capture_default_str();
  c->add_option("--st", o.st, "smoothness budget: a number, 1/T, or T^1/4")
      ->capture_default_str();
  c->add_option("--sigma", o.sigma, "agn noise level(s)");
  c->add_option("--eta", o.eta, "outlier corruption level(s)");
  c->add_option("--p", o.p, "outlier sampling probability")
      ->capture_default_str();
  c->add_option("--seed", o.seed, "base seed")->capture_default_str();
  c->add_option("--threads", o.threads, "worker threads")->capture_default_str();
}

void add_selection_options(CLI::App* c, CommonOpts& o) {
  c->add_option("--selection", o.selection,
                "auto|fixed-tau|fixed-lambda|oracle-tau")
      ->capture_default_str();
  c->add_option("--tau", o.tau, "smoothing order for selection=fixed-tau");
  c->add_option("--lambda", o.lambda, "penalty for selection=fixed-lambda");
  c->add_option("--lambda-scale", o.lambda_scale,
                "penalty per unit of the grid parameter")
      ->capture_default_str();
  c->add_option("--delta", o.delta, "oracle-tau confidence (outliers)")
      ->capture_default_str();
  c->add_option("--mu-gap", o.mu_gap, "oracle-tau anchor-gap constant")
      ->capture_default_str();
  c->add_option("--ppm-iters", o.ppm_iters, "projected power sweeps")
      ->capture_default_str();
}

void add_sweep_options(CLI::App* c, CommonOpts& o) {
  c->add_option("--t", o.t_list, "time horizons");
  c->add_option("--estimators", o.estimators, "estimators to run");
  c->add_option("--runs", o.runs, "Monte Carlo repetitions per cell")
      ->capture_default_str();
  c->add_option("--ppm-inits", o.ppm_inits, "initializers for ppm");
  c->add_option("--out", o.out, "output CSV path (default: stdout)");
  add_selection_options(c, o);
}

ExperimentConfig to_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  cfg.model = parse_model(o.model);
  cfg.n = o.n;
  cfg.T_list = o.t_list;
  cfg.st = StRule::parse(o.st);
  if (o.sigma.empty() || o.eta.empty())
    throw ValidationError("sigma and eta need at least one value");
  cfg.sigma = o.sigma.front();
  cfg.eta = o.eta.front();
  cfg.p = o.p;
  cfg.estimators = o.estimators;
  cfg.mc_runs = o.runs;
  cfg.seed = o.seed;
  cfg.lambda_scale = o.lambda_scale;
  cfg.selection = parse_selection(o.selection);
  cfg.fixed_tau = o.tau;
  cfg.fixed_lambda = o.lambda;
  cfg.delta = o.delta;
  cfg.mu_gap = o.mu_gap;
  cfg.ppm_iters = o.ppm_iters;
  cfg.ppm_inits = o.ppm_inits;
  cfg.threads = o.threads;
  return cfg;
}

void require_single_noise(const CommonOpts& o) {
  if (o.sigma.size() != 1 || o.eta.size() != 1)
    throw ValidationError(
        "this command takes a single --sigma and --eta value");
}

void emit_csv(const ExperimentConfig& cfg, const std::string& command,
              const std::vector<RunRecord>& records, const std::string& out) {
  if (out.empty()) {
    write_records_csv(std::cout, cfg, command, records);
    return;
  }
  std::ofstream os(out);
  if (!os) throw ValidationError("cannot open output file " + out);
  write_records_csv(os, cfg, command, records);
  std::cerr << "wrote " << records.size() << " rows to " << out << "\n";
}

MeasurementStack draw_measurements(const StackedSignal& truth, Model model,
                                   const CommonOpts& o, std::uint64_t seed) {
  if (model == Model::agn) return generate_agn(truth, {o.sigma.front()}, seed, o.threads);
  OutliersParams params;
  params.eta = o.eta.front();
  params.p = {o.p};
  return generate_outliers(truth, params, seed, o.threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic phase synchronization over time: generators, "
               "estimators, and experiment sweeps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read option defaults from a key=value file");

  CommonOpts gen_o;
  int gen_T = 20;
  std::string truth_out, meas_out;
  CLI::App* gen = app.add_subcommand(
      "generate", "draw a smooth ground truth and noisy pairwise offsets");
  add_model_options(gen, gen_o);
  gen->add_option("--t", gen_T, "time horizon")->capture_default_str();
  gen->add_option("--truth-out", truth_out, "write the truth signal here");
  gen->add_option("--meas-out", meas_out, "write the measurements here");

  CommonOpts est_o;
  std::string in_path, estimator = "gtrs", truth_path, out_path, fcsv,
              ppm_init = "gtrs";
  CLI::App* est = app.add_subcommand(
      "estimate", "recover the signal from a measurement file");
  add_model_options(est, est_o);
  add_selection_options(est, est_o);
  est->add_option("--in", in_path, "measurement file")->required();
  est->add_option("--estimator", estimator,
                  "gtrs|ltrs-gs|gmd-ltrs|gmd-spectral|naive-spectral|ppm")
      ->capture_default_str();
  est->add_option("--truth", truth_path, "truth signal file, enables rmse");
  est->add_option("--out", out_path, "write the estimate here");
  est->add_option("--fidelity-csv", fcsv,
                  "write the selection curve here (auto selection only)");
  est->add_option("--ppm-init", ppm_init, "initializer when estimator=ppm")
      ->capture_default_str();

  CommonOpts st_o;
  CLI::App* sweep_t = app.add_subcommand(
      "sweep-t", "error versus time horizon, CSV of per-run and summary rows");
  add_model_options(sweep_t, st_o);
  add_sweep_options(sweep_t, st_o);

  CommonOpts sn_o;
  sn_o.t_list = {20};
  sn_o.sigma = {0.75, 1.5, 3.0, 6.0, 12.0};
  sn_o.eta = {0.05, 0.1, 0.2, 0.35, 0.5};
  CLI::App* sweep_n = app.add_subcommand(
      "sweep-noise",
      "error versus noise level at one horizon; the grid comes from --sigma "
      "(agn) or --eta (outliers)");
  add_model_options(sweep_n, sn_o);
  add_sweep_options(sweep_n, sn_o);

  CommonOpts pb_o;
  CLI::App* ppm_bench = app.add_subcommand(
      "ppm-bench", "projected power refinement against each initializer");
  add_model_options(ppm_bench, pb_o);
  add_sweep_options(ppm_bench, pb_o);

  int selftest_threads = 1;
  CLI::App* selftest =
      app.add_subcommand("selftest", "run the built-in consistency checks");
  selftest->add_option("--threads", selftest_threads, "worker threads")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(gen)) {
      if (truth_out.empty() && meas_out.empty())
        throw ValidationError("nothing to do: pass --truth-out or --meas-out");
      require_single_noise(gen_o);
      Model model = parse_model(gen_o.model);
      StRule rule = StRule::parse(gen_o.st);
      GroundTruthSpec spec{gen_o.n, gen_T, rule.eval(gen_T)};
      StackedSignal truth = generate_smooth_truth(spec, gen_o.seed);
      std::cout << "n=" << spec.n << " T=" << spec.T << " budget=" << spec.s_t
                << " smoothness=" << smoothness_of(truth) << "\n";
      if (!truth_out.empty()) {
        save_signal(truth, truth_out);
        std::cout << "truth -> " << truth_out << "\n";
      }
      if (!meas_out.empty()) {
        MeasurementStack A = draw_measurements(truth, model, gen_o, gen_o.seed);
        save_measurements(A, meas_out);
        std::cout << "measurements -> " << meas_out << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(est)) {
      require_single_noise(est_o);
      MeasurementStack A = load_measurements(in_path);
      ExperimentConfig cfg = to_config(est_o);
      cfg.T_list = {A.T()};
      cfg.n = A.n();
      const double gamma =
          cfg.model == Model::agn ? est_o.sigma.front() : est_o.eta.front();

      std::optional<StackedSignal> truth;
      if (!truth_path.empty()) {
        truth = load_signal(truth_path);
        if (truth->n() != A.n() || truth->T() != A.T())
          throw ValidationError("truth and measurement shapes differ");
      }
      const StackedSignal* truth_ptr = truth ? &*truth : nullptr;

      SelectedEstimate sel = [&] {
        if (estimator == "ppm") {
          auto warm = estimate_with_selection(A, ppm_init, cfg, gamma, {},
                                              nullptr, est_o.threads);
          return estimate_with_selection(A, "ppm", cfg, gamma, {},
                                         &warm.estimate, est_o.threads,
                                         truth_ptr);
        }
        return estimate_with_selection(A, estimator, cfg, gamma, {}, nullptr,
                                       est_o.threads, truth_ptr);
      }();

      std::cout.precision(12);
      std::cout << "estimator=" << estimator << " beta=" << sel.beta
                << " tau=" << sel.tau << " lambda=" << sel.lambda
                << " fidelity=" << sel.fidelity;
      if (truth) std::cout << " rmse=" << rmse(*truth, sel.estimate);
      std::cout << "\n";
      if (!out_path.empty()) {
        save_signal(sel.estimate, out_path);
        std::cout << "estimate -> " << out_path << "\n";
      }
      if (!fcsv.empty()) {
        if (sel.fidelity_curve.empty())
          throw ValidationError(
              "--fidelity-csv needs --selection auto (no grid was scanned)");
        std::vector<double> rcurve = sel.rmse_curve;
        if (rcurve.empty())
          rcurve.assign(sel.fidelity_curve.size(),
                        std::numeric_limits<double>::quiet_NaN());
        write_fidelity_csv(fcsv, sel.grid, sel.fidelity_curve, rcurve);
        std::cout << "selection curve -> " << fcsv << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(sweep_t)) {
      require_single_noise(st_o);
      ExperimentConfig cfg = to_config(st_o);
      emit_csv(cfg, "sweep-t", run_sweep_T(cfg), st_o.out);
      return 0;
    }

    if (app.got_subcommand(sweep_n)) {
      ExperimentConfig cfg = to_config(sn_o);
      cfg.noise_grid =
          cfg.model == Model::agn ? sn_o.sigma : sn_o.eta;
      emit_csv(cfg, "sweep-noise", run_sweep_noise(cfg), sn_o.out);
      return 0;
    }

    if (app.got_subcommand(ppm_bench)) {
      require_single_noise(pb_o);
      ExperimentConfig cfg = to_config(pb_o);
      emit_csv(cfg, "ppm-bench", run_ppm_experiment(cfg), pb_o.out);
      return 0;
    }

    if (app.got_subcommand(selftest)) {
      bool ok = run_selftest(selftest_threads, std::cout);
      return ok ? 0 : 1;
    }
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}
