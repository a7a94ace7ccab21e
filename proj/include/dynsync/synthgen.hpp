#pragma once

#include <cstdint>
#include <vector>

#include "dynsync/signal.hpp"

namespace dynsync {

// target quadratic-variation budget: sum_k ||g(k) - g(k+1)||^2 <~ s_t
struct GroundTruthSpec {
  int n = 2;
  int T = 1;
  double s_t = 1.0;
};

struct AgnParams {
  double sigma = 0.0;
};

// sampling probability p may be one shared value or one per time block
struct OutliersParams {
  double eta = 0.0;
  std::vector<double> p{1.0};
};

struct OutlierNoiseStats {
  double p_min = 0, p_max = 0, p_mean = 0;
  double d_bar = 0;  // (1 - eta) * mean(p), sampling-induced shrinkage
  double V = 0;      // max_k p(k)(1 - p(k))
  double Q = 0;      // eta + Q(eta) + max_k Q(p(k))
  double f = 0;      // p_max eta + (1-eta)^2 V + p_max V (1-eta)
};

// sub-gaussian width of a centered Bernoulli(p): sqrt((1-2p) / (4 log((1-p)/p))),
// extended by continuity to sqrt(1/8) at p = 1/2 and to 0 at p in {0, 1}
double bernoulli_subg_width(double p);

OutlierNoiseStats outlier_noise_stats(const OutliersParams& params);

// Anchored smooth ground truth: a white stack shaped by the low-frequency
// projector of order tau' = min(floor(1 + sqrt(T s_t)), T), rescaled to norm
// sqrt(T), mapped entrywise through exp(i pi/2 * .), then anchored by
// prepending 1 to each block. Deterministic in (spec, seed); each time block
// draws from its own substream. The measure-zero event ||Pu|| = 0 retries
// with the next attempt substream.
StackedSignal generate_smooth_truth(const GroundTruthSpec& spec, std::uint64_t seed);

// A(k) = (g(k) g(k)^H - I) + sigma W(k); W(k) Hermitian, zero diagonal,
// strict upper entries with independent N(0, 1/2) real and imaginary parts.
MeasurementStack generate_agn(const StackedSignal& truth, const AgnParams& params,
                              std::uint64_t seed, int threads = 1);

// For i < j: g_i(k) conj(g_j(k)) with prob (1-eta) p(k); a uniform phase with
// prob eta p(k); 0 otherwise. Hermitian completion, zero diagonal.
MeasurementStack generate_outliers(const StackedSignal& truth,
                                   const OutliersParams& params, std::uint64_t seed,
                                   int threads = 1);

}  // namespace dynsync
