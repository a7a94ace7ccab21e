// Acceptance gate: one check per shipped claim, each printing a single
// CRITERION line. Run with no arguments for the full gate or with a single
// number to run one criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dynsync/estimators.hpp"
#include "dynsync/metrics.hpp"
#include "dynsync/path_basis.hpp"
#include "dynsync/rng.hpp"
#include "dynsync/selfcheck.hpp"
#include "dynsync/selection.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/sweep.hpp"
#include "dynsync/synthgen.hpp"
#include "dynsync/trs.hpp"

using namespace dynsync;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

MeasurementStack clean_data(Model model, const StackedSignal& g, std::uint64_t seed) {
  if (model == Model::agn) return generate_agn(g, {0.0}, seed);
  return generate_outliers(g, {0.0, {1.0}}, seed);
}

// ---------------------------------------------------------------------------
// 1. noiseless exactness: zero-noise data from either model is recovered to
//    working precision by every smoothing estimator at full order and by the
//    unpenalized global solver

Outcome criterion_exactness() {
  constexpr double kTol = 1e-6;       // max rmse over all runs
  constexpr double kLimitSec = 120.0;
  const auto t0 = Clock::now();
  const int n = 30, T = 20;
  double worst = 0;
  int runs = 0;
  std::string first_fail;

  for (Model model : {Model::agn, Model::outliers}) {
    for (double s_t : {0.0, 1.0 / T, 1.0}) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const StackedSignal g = generate_smooth_truth({n, T, s_t}, seed);
        const MeasurementStack A = clean_data(model, g, seed);
        const struct {
          const char* name;
          StackedSignal est;
        } fits[] = {
            {"gtrs", estimate_gtrs(A, 0.0)},
            {"ltrs-gs", estimate_ltrs_gs(A, T)},
            {"gmd-ltrs", estimate_gmd_ltrs(A, T)},
            {"gmd-spectral", estimate_gmd_spectral(A, T)},
        };
        for (const auto& f : fits) {
          const double e = rmse(f.est, g);
          worst = std::max(worst, e);
          ++runs;
          if (e >= kTol && first_fail.empty())
            first_fail = std::string(f.name) + " model=" + to_string(model) +
                         " s_t=" + fmt("%g", s_t) +
                         " seed=" + std::to_string(seed) + " rmse=" + fmt("%.3g", e);
        }
      }
    }
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst < kTol && secs < kLimitSec;
  o.detail = std::to_string(runs) + " runs, worst rmse " + fmt("%.2e", worst) +
             " vs " + fmt("%.0e", kTol) + ", " + fmt("%.1f", secs) + "s";
  if (!first_fail.empty()) o.detail += "; first failure: " + first_fail;
  return o;
}

// ---------------------------------------------------------------------------
// 2. sphere-solver oracle equivalence on random and constructed instances

Outcome criterion_trs_oracle() {
  constexpr double kObjRel = 1e-6;
  constexpr double kRadiusTol = 1e-6;
  constexpr double kKktRel = 1e-6;
  constexpr double kMultRel = 1e-6;
  constexpr double kLimitSec = 60.0;
  const auto t0 = Clock::now();

  int failures = 0;
  std::string first_fail;
  double worst_gap = 0;

  for (int trial = 0; trial < 100; ++trial) {
    CounterRng rng(CounterRng::derive(0xACCE57, trial));
    const int m = 2 + static_cast<int>(rng.next_u64() % 11);
    MatrixXcd B(m, m);
    for (int i = 0; i < m; ++i) {
      B(i, i) = cplx(2.0 * rng.next_gaussian(), 0.0);  // mixed-sign spectrum
      for (int j = i + 1; j < m; ++j) {
        B(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
        B(j, i) = std::conj(B(i, j));
      }
    }
    VectorXcd b(m);
    for (int i = 0; i < m; ++i) b[i] = cplx(rng.next_gaussian(), rng.next_gaussian());
    if (trial % 4 == 1) b *= 1e-13;  // near-hard scaling
    if (trial % 4 == 2) b *= 10.0;
    if (trial % 4 == 3) {
      // constructed hard case: remove the top-eigenspace component of b
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(B);
      const VectorXcd u = es.eigenvectors().col(m - 1);
      b -= u * u.dot(b);
    }
    const double r = 0.5 + 2.0 * rng.next_unit();

    const TrsProblem p = TrsProblem::from_dense(B, b, r);
    const TrsSolution s = solve_trs(p);
    const TrsSolution o = solve_trs_dense_oracle(p);

    const double scale = std::max(1.0, std::abs(o.objective));
    const double gap = std::abs(s.objective - o.objective) / scale;
    worst_gap = std::max(worst_gap, gap);
    const double Bn = B.norm(), bn = b.norm();
    const bool ok = gap <= kObjRel && s.radius_error <= kRadiusTol &&
                    s.kkt_residual <= kKktRel * (Bn * s.z.norm() + bn + 1.0) &&
                    s.multiplier >= o.lambda_max - kMultRel * (Bn + 1.0);
    if (!ok) {
      ++failures;
      if (first_fail.empty())
        first_fail = "trial " + std::to_string(trial) + " m=" + std::to_string(m) +
                     " gap=" + fmt("%.2e", gap) + " status=" + to_string(s.status);
    }
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failures == 0 && secs < kLimitSec;
  o.detail = "100 instances, worst objective gap " + fmt("%.2e", worst_gap) +
             " vs " + fmt("%.0e", kObjRel) + " rel, " + fmt("%.1f", secs) + "s";
  if (!first_fail.empty()) o.detail += "; first failure: " + first_fail;
  return o;
}

// ---------------------------------------------------------------------------
// 3. out-of-band energy of generated truths never exceeds the closed-form
//    bound at the measured smoothness

Outcome criterion_bias_bound() {
  constexpr double kSlack = 1e-9;  // numerical zero for the tau = T case
  constexpr double kLimitSec = 120.0;
  const auto t0 = Clock::now();

  const int ns[] = {10, 30};
  const int Ts[] = {20, 100};
  const StRule rules[] = {StRule::parse("1/T"), StRule::parse("1"),
                          StRule::parse("T^1/4")};

  int truths = 0, checks = 0, violations = 0;
  std::string first_fail;
  std::uint64_t seed = 0;
  while (truths < 100) {
    for (int n : ns)
      for (int T : Ts)
        for (const StRule& rule : rules) {
          if (truths >= 100) break;
          ++seed;
          const double s_t = rule.eval(T);
          const StackedSignal g = generate_smooth_truth({n, T, s_t}, seed);
          ++truths;
          const int taus[] = {1, static_cast<int>(std::floor(std::sqrt(T))), T / 2, T};
          for (int tau : taus) {
            const BiasDiagnostic d = bias_diagnostic(g, tau);
            ++checks;
            if (d.measured > d.bound + kSlack) {
              ++violations;
              if (first_fail.empty())
                first_fail = "n=" + std::to_string(n) + " T=" + std::to_string(T) +
                             " tau=" + std::to_string(tau) + " measured=" +
                             fmt("%.3e", d.measured) + " bound=" + fmt("%.3e", d.bound);
            }
          }
        }
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = violations == 0 && secs < kLimitSec;
  o.detail = std::to_string(truths) + " truths, " + std::to_string(checks) +
             " band checks, " + std::to_string(violations) + " violations, " +
             fmt("%.1f", secs) + "s";
  if (!first_fail.empty()) o.detail += "; first: " + first_fail;
  return o;
}

// ---------------------------------------------------------------------------
// 4. smoothing projector keeps the expected noise energy: tau n^2 for the
//    additive model, tau n^2 f for the centered corrupted model

Outcome criterion_variance_scaling() {
  constexpr double kAgnLo = 0.5, kAgnHi = 2.0;
  constexpr double kOutliersCap = 10.0;
  constexpr double kLimitSec = 180.0;
  const auto t0 = Clock::now();
  const int n = 20, T = 50, draws = 50;
  const int taus[] = {1, 5, 25};

  const PathSpectralBasis basis{T};
  std::ostringstream ratios;
  bool pass = true;

  // additive model: A - (G - I) is exactly sigma W
  for (int tau : taus) {
    const SmoothProjector P{basis, tau, n};
    double acc = 0;
    for (int d = 0; d < draws; ++d) {
      const std::uint64_t seed = CounterRng::derive(0xA4F1, d);
      const StackedSignal g = generate_smooth_truth({n, T, 1.0 / T}, seed);
      const MeasurementStack A = generate_agn(g, {1.0}, seed);
      MatrixXcd W(static_cast<Eigen::Index>(n) * T, n);
      const MatrixXcd eye = MatrixXcd::Identity(n, n);
      for (int k = 0; k < T; ++k) {
        const VectorXcd& gk = g.block(k).values();
        W.middleRows(k * n, n) = A.block(k) - (gk * gk.adjoint() - eye);
      }
      acc += P.apply(W).squaredNorm() / (double(n) * n * tau);
    }
    const double mean = acc / draws;
    ratios << " agn tau=" << tau << " ratio=" << fmt("%.3f", mean);
    if (!(mean >= kAgnLo && mean <= kAgnHi)) pass = false;
  }

  // corrupted model: center by the sampling-induced shrinkage of the truth
  const OutliersParams op{0.2, {0.2}};
  const OutlierNoiseStats stats = outlier_noise_stats(op);
  for (int tau : taus) {
    const SmoothProjector P{basis, tau, n};
    double acc = 0;
    for (int d = 0; d < draws; ++d) {
      const std::uint64_t seed = CounterRng::derive(0xB7C2, d);
      const StackedSignal g = generate_smooth_truth({n, T, 1.0 / T}, seed);
      const MeasurementStack A = generate_outliers(g, op, seed);
      MatrixXcd R(static_cast<Eigen::Index>(n) * T, n);
      const MatrixXcd eye = MatrixXcd::Identity(n, n);
      for (int k = 0; k < T; ++k) {
        const VectorXcd& gk = g.block(k).values();
        R.middleRows(k * n, n) = A.block(k) - stats.d_bar * (gk * gk.adjoint() - eye);
      }
      acc += P.apply(R).squaredNorm() / (double(n) * n * tau * stats.f);
    }
    const double mean = acc / draws;
    ratios << " outliers tau=" << tau << " ratio=" << fmt("%.3f", mean);
    if (!(mean <= kOutliersCap)) pass = false;
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = pass && secs < kLimitSec;
  o.detail = "bands [" + fmt("%.1f", kAgnLo) + "," + fmt("%.1f", kAgnHi) +
             "] and <=" + fmt("%.0f", kOutliersCap) + ":" + ratios.str() + ", " +
             fmt("%.1f", secs) + "s";
  return o;
}

// ---------------------------------------------------------------------------
// helpers for the trend criteria

double mean_rmse(const std::vector<RunRecord>& recs, const std::string& estimator,
                 int T) {
  for (const RunRecord& r : recs)
    if (r.kind == "mean" && r.estimator == estimator && r.T == T) return r.rmse_val;
  return std::nan("");
}

// ---------------------------------------------------------------------------
// 5. additive-noise horizon trends: the smooth-then-solve estimator improves
//    with a longer horizon and dominates at T=100, the memoryless spectral
//    baseline does not improve

Outcome criterion_trends_agn() {
  constexpr double kImprovement = 0.8;  // rmse(T=100) <= 0.8 rmse(T=10)
  constexpr double kNaiveFloor = 0.8;   // naive keeps >= 0.8 of its T=10 rmse
  constexpr double kLimitSec = 1800.0;
  const auto t0 = Clock::now();

  ExperimentConfig cfg;
  cfg.model = Model::agn;
  cfg.n = 30;
  cfg.T_list = {10, 40, 100};
  cfg.st = StRule::parse("1/T");
  cfg.sigma = 3.0;
  cfg.estimators = {"gmd-ltrs", "ltrs-gs", "gtrs", "naive-spectral"};
  cfg.mc_runs = 20;
  cfg.seed = 1;
  cfg.threads = 1;
  const std::vector<RunRecord> recs = run_sweep_T(cfg);

  const double gmd10 = mean_rmse(recs, "gmd-ltrs", 10);
  const double gmd100 = mean_rmse(recs, "gmd-ltrs", 100);
  const double ltrs100 = mean_rmse(recs, "ltrs-gs", 100);
  const double gtrs100 = mean_rmse(recs, "gtrs", 100);
  const double naive10 = mean_rmse(recs, "naive-spectral", 10);
  const double naive100 = mean_rmse(recs, "naive-spectral", 100);

  const bool a = gmd100 <= kImprovement * gmd10;
  const bool b = gmd100 <= ltrs100 && gmd100 <= gtrs100;
  const bool c = naive100 >= kNaiveFloor * naive10;
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = a && b && c && secs < kLimitSec;
  o.detail = "gmd-ltrs " + fmt("%.3f", gmd10) + "->" + fmt("%.3f", gmd100) +
             " (need <=" + fmt("%.3f", kImprovement * gmd10) + "), ltrs-gs@100 " +
             fmt("%.3f", ltrs100) + ", gtrs@100 " + fmt("%.3f", gtrs100) +
             ", naive " + fmt("%.3f", naive10) + "->" + fmt("%.3f", naive100) +
             ", " + fmt("%.0f", secs) + "s";
  return o;
}

// ---------------------------------------------------------------------------
// 6. corrupted-model horizon trends: every smooth estimator improves with T
//    and clearly beats the spectral baseline at the long horizon

Outcome criterion_trends_outliers() {
  constexpr double kBeatFactor = 1.5;
  constexpr double kLimitSec = 1800.0;
  const auto t0 = Clock::now();

  ExperimentConfig cfg;
  cfg.model = Model::outliers;
  cfg.n = 30;
  cfg.T_list = {10, 100};
  cfg.st = StRule::parse("1/T");
  cfg.eta = 0.2;
  cfg.p = 0.2;
  cfg.estimators = {"gmd-ltrs", "ltrs-gs", "gtrs", "naive-spectral"};
  cfg.mc_runs = 20;
  cfg.seed = 1;
  cfg.threads = 1;
  const std::vector<RunRecord> recs = run_sweep_T(cfg);

  const double naive100 = mean_rmse(recs, "naive-spectral", 100);
  bool pass = true;
  std::ostringstream detail;
  for (const char* name : {"gmd-ltrs", "ltrs-gs", "gtrs"}) {
    const double e10 = mean_rmse(recs, name, 10);
    const double e100 = mean_rmse(recs, name, 100);
    const bool decays = e100 < e10;
    const bool beats = naive100 >= kBeatFactor * e100;
    pass = pass && decays && beats;
    detail << " " << name << " " << fmt("%.3f", e10) << "->" << fmt("%.3f", e100)
           << (decays ? "" : " NO-DECAY") << (beats ? "" : " NOT-1.5x");
  }
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = pass && secs < kLimitSec;
  o.detail = "naive@100 " + fmt("%.3f", naive100) + ", smooth:" + detail.str() +
             ", " + fmt("%.0f", secs) + "s";
  return o;
}

// ---------------------------------------------------------------------------
// 7. the slope-change rule lands on beta = 1 for both local estimators on
//    most seeds of the standard corrupted configuration

Outcome criterion_selection_rule() {
  constexpr int kNeed = 15;
  constexpr double kLimitSec = 600.0;
  const auto t0 = Clock::now();
  const int n = 30, T = 20, seeds = 20;

  ExperimentConfig cfg;
  cfg.model = Model::outliers;
  cfg.n = n;
  cfg.T_list = {T};
  cfg.st = StRule::parse("1/T");
  cfg.selection = SelectionMode::auto_rule;

  int hits_ltrs = 0, hits_gmd = 0;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const StackedSignal g = generate_smooth_truth({n, T, 1.0 / T}, seed);
    const MeasurementStack A = generate_outliers(g, {0.2, {0.2}}, seed);
    if (estimate_with_selection(A, "ltrs-gs", cfg, 0.2).beta == 1.0) ++hits_ltrs;
    if (estimate_with_selection(A, "gmd-ltrs", cfg, 0.2).beta == 1.0) ++hits_gmd;
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = hits_ltrs >= kNeed && hits_gmd >= kNeed && secs < kLimitSec;
  o.detail = "beta=1 on ltrs-gs " + std::to_string(hits_ltrs) + "/20, gmd-ltrs " +
             std::to_string(hits_gmd) + "/20 (need >= " + std::to_string(kNeed) +
             "), " + fmt("%.1f", secs) + "s";
  return o;
}

// ---------------------------------------------------------------------------
// 8. the refinement iteration has the truth as an exact fixed point on clean
//    data with no smoothing penalty

Outcome criterion_ppm_fixed_point() {
  constexpr double kTol = 1e-12;
  constexpr double kLimitSec = 10.0;
  const auto t0 = Clock::now();
  const int n = 10, T = 5;
  double worst = 0;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const StackedSignal g = generate_smooth_truth({n, T, 1.0}, seed);
    const MeasurementStack A = generate_agn(g, {0.0}, seed);
    const StackedSignal est = estimate_ppm(A, 0.0, g, 50);
    for (int k = 0; k < T; ++k)
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(est.block(k)[i] - g.block(k)[i]));
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst < kTol && secs < kLimitSec;
  o.detail = "10 seeds, worst entrywise distance " + fmt("%.2e", worst) + " vs " +
             fmt("%.0e", kTol) + ", " + fmt("%.1f", secs) + "s";
  return o;
}

// ---------------------------------------------------------------------------
// 9. the full invariant suite passes

Outcome criterion_selftest() {
  constexpr double kLimitSec = 600.0;
  const auto t0 = Clock::now();
  const std::vector<CheckResult> results = run_selftest_checks(1);
  int failed = 0;
  std::string first_fail;
  for (const CheckResult& r : results)
    if (!r.pass) {
      ++failed;
      if (first_fail.empty()) first_fail = r.name + ": " + r.detail;
    }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && secs < kLimitSec;
  o.detail = std::to_string(results.size()) + " checks, " + std::to_string(failed) +
             " failed, " + fmt("%.1f", secs) + "s";
  if (!first_fail.empty()) o.detail += "; first: " + first_fail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::function<Outcome()> criteria[] = {
      criterion_exactness,       criterion_trs_oracle,      criterion_bias_bound,
      criterion_variance_scaling, criterion_trends_agn,     criterion_trends_outliers,
      criterion_selection_rule,  criterion_ppm_fixed_point, criterion_selftest,
  };
  const int count = static_cast<int>(std::size(criteria));

  int lo = 1, hi = count;
  if (argc > 1) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > count) {
      std::fprintf(stderr, "usage: %s [criterion 1..%d]\n", argv[0], count);
      return 2;
    }
    lo = hi = k;
  }

  bool all_pass = true;
  for (int k = lo; k <= hi; ++k) {
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    std::printf("CRITERION %d: %s (%s)\n", k, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
