#pragma once

#include <Eigen/Dense>

#include "dynsync/signal.hpp"
#include "dynsync/synthgen.hpp"

namespace dynsync {

struct ErrorReport {
  Eigen::VectorXd per_block_l2;  // ||g_hat(k) - g(k)||_2
  double rmse = 0;               // sqrt(sum_k ||.||^2 / (n T))
};

// no phase alignment: both signals are anchored, so the error is absolute
double rmse(const StackedSignal& estimate, const StackedSignal& truth);
ErrorReport error_report(const StackedSignal& estimate, const StackedSignal& truth);

// bias/variance-balancing smoothing order for additive Gaussian noise:
// min(1 + floor((T^2 s_t / (n sigma^2))^(1/3)), T); sigma = 0 gives T,
// s_t = 0 gives 1
int tau_star_agn(int n, int T, double s_t, double sigma);

// outliers counterpart, driven by the noise statistics; mu_gap is the
// anchor-gap constant, delta the confidence parameter in (0, 1)
int tau_star_outliers(int n, int T, double s_t, const OutlierNoiseStats& stats,
                      double mu_gap = 1.0, double delta = 0.1);

struct BiasDiagnostic {
  double measured = 0;  // squared Frobenius mass of the truth outside the band
  double bound = 0;     // (20 n / pi^2) T^2 s / tau^2 for tau < T, else 0
};

// energy of the centered rank-one truth stack outside the order-tau band,
// against its closed-form bound evaluated at the measured smoothness
BiasDiagnostic bias_diagnostic(const StackedSignal& truth, int tau);

}  // namespace dynsync
