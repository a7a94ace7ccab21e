#include "dynsync/metrics.hpp"

#include <cmath>

#include "dynsync/errors.hpp"
#include "dynsync/path_basis.hpp"

namespace dynsync {

namespace {
constexpr double kPiSq = 9.869604401089358618834490999876151135;

int clamp_tau(double v, int T) {
  if (!(v > 0)) return 1;
  if (v >= double(T)) return T;
  return std::min(1 + static_cast<int>(std::floor(v)), T);
}
}  // namespace

ErrorReport error_report(const StackedSignal& estimate, const StackedSignal& truth) {
  if (estimate.n() != truth.n() || estimate.T() != truth.T())
    throw ValidationError("error_report: shape mismatch");
  ErrorReport r;
  r.per_block_l2.resize(truth.T());
  double acc = 0;
  for (int k = 0; k < truth.T(); ++k) {
    const double e = (estimate.block(k).values() - truth.block(k).values()).norm();
    r.per_block_l2[k] = e;
    acc += e * e;
  }
  r.rmse = std::sqrt(acc / (double(truth.n()) * truth.T()));
  return r;
}

double rmse(const StackedSignal& estimate, const StackedSignal& truth) {
  return error_report(estimate, truth).rmse;
}

int tau_star_agn(int n, int T, double s_t, double sigma) {
  if (n < 2 || T < 1) throw ValidationError("tau_star_agn: need n >= 2, T >= 1");
  if (!(s_t >= 0) || !(sigma >= 0))
    throw ValidationError("tau_star_agn: negative parameter");
  if (sigma == 0.0) return T;
  if (s_t == 0.0) return 1;
  const double v = std::cbrt(double(T) * T * s_t / (double(n) * sigma * sigma));
  return clamp_tau(v, T);
}

int tau_star_outliers(int n, int T, double s_t, const OutlierNoiseStats& stats,
                      double mu_gap, double delta) {
  if (n < 2 || T < 1) throw ValidationError("tau_star_outliers: need n >= 2, T >= 1");
  if (!(s_t >= 0)) throw ValidationError("tau_star_outliers: s_t < 0");
  if (!(mu_gap > 0)) throw ValidationError("tau_star_outliers: mu_gap <= 0");
  if (!(delta > 0 && delta < 1))
    throw ValidationError("tau_star_outliers: delta outside (0,1)");
  const double f_eff = stats.f + stats.Q * stats.Q * std::log(1.0 / delta);
  if (f_eff == 0.0) return T;
  if (s_t == 0.0) return 1;
  const double v = std::cbrt(mu_gap * stats.d_bar * stats.d_bar * double(T) * T *
                             s_t / (double(n) * f_eff));
  return clamp_tau(v, T);
}

BiasDiagnostic bias_diagnostic(const StackedSignal& truth, int tau) {
  const int n = truth.n(), T = truth.T();
  if (tau < 1 || tau > T) throw ValidationError("bias_diagnostic: tau outside [1, T]");
  const PathSpectralBasis basis{T};
  const SmoothProjector proj{basis, tau, n};
  MatrixXcd centered(static_cast<Eigen::Index>(n) * T, n);
  const MatrixXcd eye = MatrixXcd::Identity(n, n);
  for (int k = 0; k < T; ++k) {
    const VectorXcd& g = truth.block(k).values();
    centered.middleRows(k * n, n) = g * g.adjoint() - eye;
  }
  BiasDiagnostic d;
  d.measured = proj.apply_complement(centered).squaredNorm();
  if (tau < T) {
    const double s = smoothness_of(truth);
    d.bound = 20.0 * n / kPiSq * double(T) * T * s / (double(tau) * tau);
  } else {
    d.bound = 0.0;
  }
  return d;
}

}  // namespace dynsync
