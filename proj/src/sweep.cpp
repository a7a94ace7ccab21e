#include "dynsync/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "dynsync/errors.hpp"
#include "dynsync/estimators.hpp"
#include "dynsync/metrics.hpp"
#include "dynsync/parallel.hpp"
#include "dynsync/rng.hpp"

namespace dynsync {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

std::string join_g17(const std::vector<double>& v) {
  std::vector<std::string> s;
  s.reserve(v.size());
  for (double x : v) s.push_back(g17(x));
  return join(s);
}

std::string join_int(const std::vector<int>& v) {
  std::vector<std::string> s;
  s.reserve(v.size());
  for (int x : v) s.push_back(std::to_string(x));
  return join(s);
}

}  // namespace

Model parse_model(const std::string& s) {
  if (s == "agn") return Model::agn;
  if (s == "outliers") return Model::outliers;
  throw ValidationError("unknown model '" + s + "' (expected agn|outliers)");
}

const char* to_string(Model m) {
  return m == Model::agn ? "agn" : "outliers";
}

SelectionMode parse_selection(const std::string& s) {
  if (s == "auto") return SelectionMode::auto_rule;
  if (s == "fixed-tau") return SelectionMode::fixed_tau;
  if (s == "fixed-lambda") return SelectionMode::fixed_lambda;
  if (s == "oracle-tau") return SelectionMode::oracle_tau;
  throw ValidationError("unknown selection '" + s +
                        "' (expected auto|fixed-tau|fixed-lambda|oracle-tau)");
}

const char* to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::auto_rule: return "auto";
    case SelectionMode::fixed_tau: return "fixed-tau";
    case SelectionMode::fixed_lambda: return "fixed-lambda";
    case SelectionMode::oracle_tau: return "oracle-tau";
  }
  return "?";
}

double StRule::eval(int T) const {
  if (T < 1) throw ValidationError("StRule: T must be >= 1");
  switch (kind) {
    case Kind::constant: return value;
    case Kind::inv_t: return 1.0 / T;
    case Kind::fourth_root: return std::pow(double(T), 0.25);
  }
  return 0;
}

std::string StRule::str() const {
  switch (kind) {
    case Kind::constant: return g17(value);
    case Kind::inv_t: return "1/T";
    case Kind::fourth_root: return "T^1/4";
  }
  return "?";
}

StRule StRule::parse(const std::string& s) {
  if (s == "1/T" || s == "1/t") return {Kind::inv_t, 1.0};
  if (s == "T^1/4" || s == "T^(1/4)" || s == "T^0.25" || s == "t^1/4")
    return {Kind::fourth_root, 0.25};
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    if (!(v >= 0))
      throw ValidationError("smoothness budget must be >= 0, got " + s);
    return {Kind::constant, v};
  } catch (const std::invalid_argument&) {
    throw ValidationError("cannot parse smoothness rule '" + s +
                          "' (expected a number, 1/T, or T^1/4)");
  } catch (const std::out_of_range&) {
    throw ValidationError("smoothness rule out of range: " + s);
  }
}

const std::vector<std::string> kEstimatorNames = {
    "gtrs", "ltrs-gs", "gmd-ltrs", "gmd-spectral", "naive-spectral", "ppm"};

bool is_tau_estimator(const std::string& name) {
  return name == "ltrs-gs" || name == "gmd-ltrs" || name == "gmd-spectral";
}

namespace {

bool is_lambda_estimator(const std::string& name) {
  return name == "gtrs" || name == "ppm";
}

void check_estimator_name(const std::string& name) {
  if (std::find(kEstimatorNames.begin(), kEstimatorNames.end(), name) ==
      kEstimatorNames.end())
    throw ValidationError("unknown estimator '" + name + "' (expected " +
                          join(kEstimatorNames) + ")");
}

}  // namespace

void ExperimentConfig::validate_common() const {
  if (n < 2) throw ValidationError("n must be >= 2");
  if (T_list.empty()) throw ValidationError("T list must not be empty");
  for (int T : T_list)
    if (T < 1) throw ValidationError("every T must be >= 1");
  if (sigma < 0) throw ValidationError("sigma must be >= 0");
  if (eta < 0 || eta > 1) throw ValidationError("eta must lie in [0,1]");
  if (p < 0 || p > 1) throw ValidationError("p must lie in [0,1]");
  if (mc_runs < 1) throw ValidationError("runs must be >= 1");
  if (!(lambda_scale > 0)) throw ValidationError("lambda_scale must be > 0");
  if (estimators.empty()) throw ValidationError("estimator list is empty");
  for (const auto& e : estimators) check_estimator_name(e);
  for (const auto& e : ppm_inits) {
    check_estimator_name(e);
    if (e == "ppm") throw ValidationError("ppm cannot initialize itself");
  }
  if (std::find(estimators.begin(), estimators.end(), "ppm") !=
          estimators.end() &&
      ppm_inits.empty())
    throw ValidationError("ppm requested but ppm_inits is empty");
  if (ppm_iters < 1) throw ValidationError("ppm_iters must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (selection == SelectionMode::fixed_tau && !(fixed_tau >= 1))
    throw ValidationError("fixed tau must be >= 1");
  if (selection == SelectionMode::fixed_lambda && !(fixed_lambda >= 0))
    throw ValidationError("fixed lambda must be >= 0");
  if (!(delta > 0 && delta < 1))
    throw ValidationError("delta must lie in (0,1)");
  if (!(mu_gap > 0)) throw ValidationError("mu_gap must be > 0");
}

std::uint64_t run_seed_for(std::uint64_t base, int T, double gamma, int mc) {
  std::uint64_t s = CounterRng::derive(base, 0xD45EEDULL);
  s = CounterRng::derive(s, static_cast<std::uint64_t>(T));
  s = CounterRng::derive(s, CounterRng::bits_of(gamma));
  return CounterRng::derive(s, static_cast<std::uint64_t>(mc));
}

namespace {

// evaluate one estimator at one grid point; tau-family estimates are cached
// by tau because several beta values can collapse onto the same tau
struct GridEvaluator {
  const MeasurementStack& A;
  const std::string& name;
  const ExperimentConfig& cfg;
  const TrsOptions& topts;
  const StackedSignal* ppm_init;
  int threads;
  std::optional<Eigen::MatrixXcd> locals;  // ltrs-gs per-block solutions
  std::map<int, StackedSignal> by_tau;

  StackedSignal at_beta(double beta) {
    const int T = A.T();
    if (is_lambda_estimator(name)) {
      const double lambda = cfg.lambda_scale * beta;
      if (name == "gtrs") return estimate_gtrs(A, lambda, topts, threads);
      return estimate_ppm(A, lambda, *ppm_init, cfg.ppm_iters, threads);
    }
    if (name == "naive-spectral")
      return estimate_naive_spectral(A, threads);
    const int tau = tau_for_beta(beta, T);
    auto it = by_tau.find(tau);
    if (it != by_tau.end()) return it->second;
    StackedSignal est = [&] {
      if (name == "ltrs-gs") {
        if (!locals) locals = local_sphere_solutions(A, topts, threads);
        return ltrs_gs_from_locals(*locals, tau, threads);
      }
      if (name == "gmd-ltrs") return estimate_gmd_ltrs(A, tau, topts, threads);
      return estimate_gmd_spectral(A, tau, threads);
    }();
    by_tau.emplace(tau, est);
    return est;
  }
};

double resolve_fixed_beta(const MeasurementStack& A, const std::string& name,
                          const ExperimentConfig& cfg, double gamma) {
  switch (cfg.selection) {
    case SelectionMode::fixed_tau:
      return cfg.fixed_tau - 1.0;
    case SelectionMode::fixed_lambda:
      return cfg.fixed_lambda / cfg.lambda_scale;
    case SelectionMode::oracle_tau: {
      const int n = A.n(), T = A.T();
      const double s_t = cfg.st.eval(T);
      int tau = 0;
      if (cfg.model == Model::agn) {
        tau = tau_star_agn(n, T, s_t, gamma);
      } else {
        OutliersParams op;
        op.eta = gamma;
        op.p = {cfg.p};
        tau = tau_star_outliers(n, T, s_t, outlier_noise_stats(op),
                                cfg.mu_gap, cfg.delta);
      }
      return tau - 1.0;
    }
    case SelectionMode::auto_rule:
      break;
  }
  (void)name;
  throw ValidationError("auto selection has no fixed beta");
}

}  // namespace

SelectedEstimate estimate_with_selection(const MeasurementStack& A,
                                         const std::string& estimator,
                                         const ExperimentConfig& cfg,
                                         double gamma, const TrsOptions& topts,
                                         const StackedSignal* ppm_init,
                                         int threads, const StackedSignal* truth) {
  check_estimator_name(estimator);
  if (estimator == "ppm" && ppm_init == nullptr)
    throw ValidationError("ppm needs an initial estimate");
  const int T = A.T();
  GridEvaluator ev{A, estimator, cfg, topts, ppm_init, threads, {}, {}};

  if (estimator == "naive-spectral") {
    StackedSignal est = estimate_naive_spectral(A, threads);
    const double fid = data_fidelity(A, est);
    return SelectedEstimate{std::move(est), 0, 0, 0, fid, {}, {}, {}};
  }

  if (cfg.selection != SelectionMode::auto_rule) {
    const double beta = resolve_fixed_beta(A, estimator, cfg, gamma);
    StackedSignal est = ev.at_beta(beta);
    const double fid = data_fidelity(A, est);
    return SelectedEstimate{std::move(est),
                            beta,
                            double(tau_for_beta(beta, T)),
                            cfg.lambda_scale * beta,
                            fid,
                            {},
                            {},
                            {}};
  }

  BetaGrid grid = build_beta_grid(T);
  std::vector<double> fid(grid.betas.size());
  std::vector<double> err;
  std::vector<StackedSignal> fits;
  fits.reserve(grid.betas.size());
  for (std::size_t i = 0; i < grid.betas.size(); ++i) {
    fits.push_back(ev.at_beta(grid.betas[i]));
    fid[i] = data_fidelity(A, fits.back());
    if (truth) err.push_back(rmse(*truth, fits.back()));
  }
  int pick;
  if (is_tau_estimator(estimator) && grid.betas.size() >= 3)
    pick = select_beta_slope_change(grid, fid);
  else
    pick = select_beta_argmax(fid);
  const std::size_t k = std::size_t(pick);
  const double beta = grid.betas[k];
  return SelectedEstimate{std::move(fits[k]),
                          beta,
                          double(tau_for_beta(beta, T)),
                          cfg.lambda_scale * beta,
                          fid[k],
                          std::move(fid),
                          std::move(err),
                          std::move(grid)};
}

namespace {

struct Job {
  std::string estimator;  // record tag
  std::string init;       // nonempty iff estimator == "ppm"
};

std::vector<RunRecord> run_cells(const ExperimentConfig& cfg,
                                 const std::vector<std::pair<int, double>>& cells,
                                 const std::vector<Job>& jobs) {
  cfg.validate_common();
  const int mc = cfg.mc_runs;
  const std::size_t rows_per_job = std::size_t(mc) + 2;  // runs + mean + std
  const std::size_t rows_per_cell = jobs.size() * rows_per_job;
  std::vector<RunRecord> records(cells.size() * rows_per_cell);

  const std::int64_t tasks = std::int64_t(cells.size()) * mc;
  parallel_for(tasks, cfg.threads, [&](std::int64_t t) {
    const std::size_t cell = std::size_t(t) / mc;
    const int mc_i = int(t % mc);
    const auto [T, gamma] = cells[cell];
    const std::uint64_t seed = run_seed_for(cfg.seed, T, gamma, mc_i);

    std::vector<RunRecord*> slots(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      RunRecord& r =
          records[cell * rows_per_cell + j * rows_per_job + std::size_t(mc_i)];
      r.estimator = jobs[j].estimator;
      r.init = jobs[j].init;
      r.T = T;
      r.gamma = gamma;
      r.mc_index = mc_i;
      r.run_seed = seed;
      r.rmse_val = kNaN;
      r.seed_rmse = kNaN;
      r.fidelity = kNaN;
      slots[j] = &r;
    }

    std::optional<StackedSignal> truth;
    std::optional<MeasurementStack> A;
    try {
      GroundTruthSpec spec{cfg.n, T, cfg.st.eval(T)};
      truth = generate_smooth_truth(spec, seed);
      if (cfg.model == Model::agn) {
        AgnParams ap{gamma};
        A = generate_agn(*truth, ap, seed, 1);
      } else {
        OutliersParams op;
        op.eta = gamma;
        op.p = {cfg.p};
        A = generate_outliers(*truth, op, seed, 1);
      }
    } catch (const std::runtime_error& ex) {
      for (auto* r : slots) r->status = std::string("failed:") + ex.what();
      return;
    }

    TrsOptions topts;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      RunRecord& r = *slots[j];
      try {
        std::optional<SelectedEstimate> sel;
        if (jobs[j].estimator == "ppm") {
          auto warm =
              estimate_with_selection(*A, jobs[j].init, cfg, gamma, topts,
                                      nullptr, 1);
          r.seed_rmse = rmse(*truth, warm.estimate);
          sel = estimate_with_selection(*A, "ppm", cfg, gamma, topts,
                                        &warm.estimate, 1);
        } else {
          sel = estimate_with_selection(*A, jobs[j].estimator, cfg, gamma,
                                        topts, nullptr, 1);
        }
        r.beta = sel->beta;
        r.tau = sel->tau;
        r.lambda = sel->lambda;
        r.fidelity = sel->fidelity;
        r.rmse_val = rmse(*truth, sel->estimate);
      } catch (const ValidationError& ex) {
        r.status = std::string("failed:") + ex.what();
      } catch (const NumericalError& ex) {
        r.status = std::string("failed:") + ex.what();
      }
    }
  });

  // aggregate rows, skipping failed runs (and NaN seed_rmse on non-ppm rows)
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const std::size_t base = cell * rows_per_cell + j * rows_per_job;
      auto field_stats = [&](auto getter, double& mean, double& sdev) {
        std::vector<double> xs;
        for (int i = 0; i < mc; ++i) {
          const RunRecord& r = records[base + std::size_t(i)];
          if (r.status != "ok") continue;
          const double v = getter(r);
          if (std::isnan(v)) continue;
          xs.push_back(v);
        }
        if (xs.empty()) {
          mean = kNaN;
          sdev = kNaN;
          return;
        }
        double s = 0;
        for (double x : xs) s += x;
        mean = s / double(xs.size());
        if (xs.size() < 2) {
          sdev = 0;
          return;
        }
        double q = 0;
        for (double x : xs) q += (x - mean) * (x - mean);
        sdev = std::sqrt(q / double(xs.size() - 1));
      };

      int ok = 0;
      for (int i = 0; i < mc; ++i)
        if (records[base + std::size_t(i)].status == "ok") ++ok;

      RunRecord& m = records[base + std::size_t(mc)];
      RunRecord& s = records[base + std::size_t(mc) + 1];
      m = records[base];  // copy identity fields (estimator, T, gamma, ...)
      m.kind = "mean";
      m.mc_index = -1;
      m.run_seed = 0;
      s = m;
      s.kind = "std";
      const std::string agg_status =
          "ok:" + std::to_string(ok) + "/" + std::to_string(mc);
      m.status = agg_status;
      s.status = agg_status;
      field_stats([](const RunRecord& r) { return r.beta; }, m.beta, s.beta);
      field_stats([](const RunRecord& r) { return r.tau; }, m.tau, s.tau);
      field_stats([](const RunRecord& r) { return r.lambda; }, m.lambda,
                  s.lambda);
      field_stats([](const RunRecord& r) { return r.fidelity; }, m.fidelity,
                  s.fidelity);
      field_stats([](const RunRecord& r) { return r.rmse_val; }, m.rmse_val,
                  s.rmse_val);
      field_stats([](const RunRecord& r) { return r.seed_rmse; }, m.seed_rmse,
                  s.seed_rmse);
    }
  }
  return records;
}

std::vector<Job> jobs_from_estimators(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (const auto& e : cfg.estimators) {
    Job j{e, ""};
    if (e == "ppm") j.init = cfg.ppm_inits.front();
    jobs.push_back(std::move(j));
  }
  return jobs;
}

}  // namespace

std::vector<RunRecord> run_sweep_T(const ExperimentConfig& cfg) {
  const double gamma = cfg.model == Model::agn ? cfg.sigma : cfg.eta;
  std::vector<std::pair<int, double>> cells;
  for (int T : cfg.T_list) cells.emplace_back(T, gamma);
  return run_cells(cfg, cells, jobs_from_estimators(cfg));
}

std::vector<RunRecord> run_sweep_noise(const ExperimentConfig& cfg) {
  if (cfg.T_list.size() != 1)
    throw ValidationError("noise sweep needs exactly one T");
  if (cfg.noise_grid.empty())
    throw ValidationError("noise sweep needs a nonempty noise grid");
  for (double g : cfg.noise_grid) {
    if (cfg.model == Model::agn && g < 0)
      throw ValidationError("sigma values must be >= 0");
    if (cfg.model == Model::outliers && (g < 0 || g > 1))
      throw ValidationError("eta values must lie in [0,1]");
  }
  std::vector<std::pair<int, double>> cells;
  for (double g : cfg.noise_grid) cells.emplace_back(cfg.T_list.front(), g);
  return run_cells(cfg, cells, jobs_from_estimators(cfg));
}

std::vector<RunRecord> run_ppm_experiment(const ExperimentConfig& cfg) {
  if (cfg.ppm_inits.empty())
    throw ValidationError("ppm experiment needs at least one initializer");
  const double gamma = cfg.model == Model::agn ? cfg.sigma : cfg.eta;
  std::vector<std::pair<int, double>> cells;
  for (int T : cfg.T_list) cells.emplace_back(T, gamma);
  std::vector<Job> jobs;
  for (const auto& init : cfg.ppm_inits) jobs.push_back(Job{"ppm", init});
  return run_cells(cfg, cells, jobs);
}

void write_records_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::string& command,
                       const std::vector<RunRecord>& records) {
  os << "# command=" << command << "\n";
  os << "# model=" << to_string(cfg.model) << "\n";
  os << "# n=" << cfg.n << "\n";
  os << "# T=" << join_int(cfg.T_list) << "\n";
  os << "# st=" << cfg.st.str() << "\n";
  os << "# sigma=" << g17(cfg.sigma) << "\n";
  os << "# eta=" << g17(cfg.eta) << "\n";
  os << "# p=" << g17(cfg.p) << "\n";
  if (!cfg.noise_grid.empty())
    os << "# noise_grid=" << join_g17(cfg.noise_grid) << "\n";
  os << "# estimators=" << join(cfg.estimators) << "\n";
  os << "# mc=" << cfg.mc_runs << "\n";
  os << "# seed=" << cfg.seed << "\n";
  os << "# lambda_scale=" << g17(cfg.lambda_scale) << "\n";
  os << "# selection=" << to_string(cfg.selection) << "\n";
  if (cfg.selection == SelectionMode::fixed_tau)
    os << "# fixed_tau=" << g17(cfg.fixed_tau) << "\n";
  if (cfg.selection == SelectionMode::fixed_lambda)
    os << "# fixed_lambda=" << g17(cfg.fixed_lambda) << "\n";
  os << "# delta=" << g17(cfg.delta) << "\n";
  os << "# mu_gap=" << g17(cfg.mu_gap) << "\n";
  os << "# ppm_iters=" << cfg.ppm_iters << "\n";
  os << "# ppm_inits=" << join(cfg.ppm_inits) << "\n";
  os << "kind,estimator,init,T,gamma,mc,seed,beta,tau,lambda,fidelity,rmse,"
        "seed_rmse,status\n";
  for (const auto& r : records) {
    os << r.kind << ',' << r.estimator << ',' << r.init << ',' << r.T << ','
       << g17(r.gamma) << ',' << r.mc_index << ',' << r.run_seed << ','
       << g17(r.beta) << ',' << g17(r.tau) << ',' << g17(r.lambda) << ','
       << g17(r.fidelity) << ',' << g17(r.rmse_val) << ','
       << g17(r.seed_rmse) << ',' << r.status << "\n";
  }
}

}  // namespace dynsync
