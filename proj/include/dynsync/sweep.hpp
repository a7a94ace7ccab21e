#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dynsync/selection.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/synthgen.hpp"
#include "dynsync/trs.hpp"

namespace dynsync {

enum class Model { agn, outliers };
Model parse_model(const std::string& s);
const char* to_string(Model m);

enum class SelectionMode { auto_rule, fixed_tau, fixed_lambda, oracle_tau };
SelectionMode parse_selection(const std::string& s);
const char* to_string(SelectionMode m);

// smoothness budget as a function of T: a constant, 1/T, or T^(1/4)
struct StRule {
  enum class Kind { constant, inv_t, fourth_root };
  Kind kind = Kind::inv_t;
  double value = 1.0;

  double eval(int T) const;
  std::string str() const;
  static StRule parse(const std::string& s);
};

extern const std::vector<std::string> kEstimatorNames;  // valid --estimators values
bool is_tau_estimator(const std::string& name);  // consumes tau rather than lambda

struct ExperimentConfig {
  Model model = Model::agn;
  int n = 30;
  std::vector<int> T_list = {10, 20, 40, 70, 100};
  StRule st{};
  double sigma = 3.0;  // agn noise level for sweep-t / ppm-bench
  double eta = 0.2;    // outliers corruption level for sweep-t / ppm-bench
  std::vector<double> noise_grid;  // sweep-noise axis (sigma or eta values)
  double p = 1.0;                  // outliers sampling probability
  std::vector<std::string> estimators = {"gtrs", "ltrs-gs", "gmd-ltrs",
                                         "naive-spectral"};
  int mc_runs = 20;
  std::uint64_t seed = 1;
  double lambda_scale = 10.0;
  SelectionMode selection = SelectionMode::auto_rule;
  double fixed_tau = 1;     // selection = fixed-tau
  double fixed_lambda = 0;  // selection = fixed-lambda
  double delta = 0.1;       // oracle-tau confidence (outliers)
  double mu_gap = 1.0;      // oracle-tau anchor-gap constant (outliers)
  int ppm_iters = 50;
  std::vector<std::string> ppm_inits = {"gtrs", "gmd-ltrs", "ltrs-gs",
                                        "naive-spectral"};
  int threads = 1;

  void validate_common() const;
};

struct RunRecord {
  std::string kind = "run";  // run | mean | std
  std::string estimator;
  std::string init;  // ppm rows: the initializer tag
  int T = 0;
  double gamma = 0;  // noise level of the cell (sigma or eta)
  int mc_index = -1;
  std::uint64_t run_seed = 0;
  double beta = 0, tau = 0, lambda = 0;  // selected hyperparameters
  double fidelity = 0;
  double rmse_val = 0;
  double seed_rmse = 0;  // ppm rows: rmse of the initializer
  std::string status = "ok";
};

std::uint64_t run_seed_for(std::uint64_t base, int T, double gamma, int mc);

// one estimator on one data set, hyperparameter resolved per cfg.selection
struct SelectedEstimate {
  StackedSignal estimate;
  double beta = 0, tau = 0, lambda = 0;
  double fidelity = 0;
  std::vector<double> fidelity_curve;  // auto mode: one value per grid beta
  std::vector<double> rmse_curve;      // filled when a truth is supplied
  BetaGrid grid;
};
// gamma: noise level of the cell (sigma for agn, eta for outliers), used by
// the oracle-tau rule; ppm requires ppm_init and selects lambda by fidelity
SelectedEstimate estimate_with_selection(const MeasurementStack& A,
                                         const std::string& estimator,
                                         const ExperimentConfig& cfg,
                                         double gamma,
                                         const TrsOptions& topts = {},
                                         const StackedSignal* ppm_init = nullptr,
                                         int threads = 1,
                                         const StackedSignal* truth = nullptr);

std::vector<RunRecord> run_sweep_T(const ExperimentConfig& cfg);
std::vector<RunRecord> run_sweep_noise(const ExperimentConfig& cfg);
// PPM refinement against each initializer, lambda re-selected for PPM by the
// fidelity argmax rule on the same beta grid
std::vector<RunRecord> run_ppm_experiment(const ExperimentConfig& cfg);

// '#'-prefixed config echo, a column header, then one line per record;
// byte-identical for identical (config, records)
void write_records_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::string& command,
                       const std::vector<RunRecord>& records);

}  // namespace dynsync
