#include "dynsync/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "dynsync/errors.hpp"
#include "dynsync/parallel.hpp"
#include "dynsync/path_basis.hpp"
#include "dynsync/rng.hpp"

namespace dynsync {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// substream domains
constexpr std::uint64_t kDomainTruth = 1;
constexpr std::uint64_t kDomainAgn = 2;
constexpr std::uint64_t kDomainOutliers = 3;

const std::vector<double>& checked_p(const OutliersParams& params, int T) {
  if (params.p.empty())
    throw ValidationError("outliers: need at least one sampling probability");
  if (params.p.size() != 1 && static_cast<int>(params.p.size()) != T)
    throw ValidationError("outliers: p must be scalar or one entry per block");
  for (double p : params.p)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("outliers: p outside [0,1]");
  if (!(params.eta >= 0.0 && params.eta <= 1.0))
    throw ValidationError("outliers: eta outside [0,1]");
  return params.p;
}

double p_at(const std::vector<double>& p, int k) {
  return p.size() == 1 ? p[0] : p[k];
}

}  // namespace

double bernoulli_subg_width(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("bernoulli_subg_width: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  if (std::abs(p - 0.5) < 1e-12) return std::sqrt(0.125);
  return std::sqrt((1.0 - 2.0 * p) / (4.0 * std::log((1.0 - p) / p)));
}

OutlierNoiseStats outlier_noise_stats(const OutliersParams& params) {
  const auto& p = checked_p(params, static_cast<int>(params.p.size()));
  OutlierNoiseStats s;
  s.p_min = *std::min_element(p.begin(), p.end());
  s.p_max = *std::max_element(p.begin(), p.end());
  double acc = 0, wmax = 0, vmax = 0;
  for (double pk : p) {
    acc += pk;
    wmax = std::max(wmax, bernoulli_subg_width(pk));
    vmax = std::max(vmax, pk * (1.0 - pk));
  }
  s.p_mean = acc / static_cast<double>(p.size());
  s.d_bar = (1.0 - params.eta) * s.p_mean;
  s.V = vmax;
  s.Q = params.eta + bernoulli_subg_width(params.eta) + wmax;
  s.f = s.p_max * params.eta + (1.0 - params.eta) * (1.0 - params.eta) * s.V +
        s.p_max * s.V * (1.0 - params.eta);
  return s;
}

StackedSignal generate_smooth_truth(const GroundTruthSpec& spec, std::uint64_t seed) {
  const int n = spec.n, T = spec.T;
  if (n < 2 || T < 1) throw ValidationError("generate_smooth_truth: need n >= 2, T >= 1");
  if (!(spec.s_t >= 0.0)) throw ValidationError("generate_smooth_truth: s_t < 0");
  const int m = n - 1;
  const int tau = std::min(static_cast<int>(std::floor(1.0 + std::sqrt(T * spec.s_t))), T);

  const PathSpectralBasis basis{T};
  const SmoothProjector proj{basis, tau, m};

  const std::uint64_t truth_key = CounterRng::derive(seed, kDomainTruth);
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t attempt_key = CounterRng::derive(truth_key, attempt);
    Eigen::MatrixXd u(static_cast<Eigen::Index>(m) * T, 1);
    for (int k = 0; k < T; ++k) {
      CounterRng rng{CounterRng::derive(attempt_key, k)};
      for (int i = 0; i < m; ++i) u(k * m + i, 0) = rng.next_gaussian();
    }
    Eigen::MatrixXd pu = proj.apply(u);
    const double norm = pu.norm();
    if (norm == 0.0) continue;  // measure-zero; next attempt substream
    pu *= std::sqrt(static_cast<double>(T)) / norm;

    std::vector<UnitSignal> blocks;
    blocks.reserve(T);
    for (int k = 0; k < T; ++k) {
      VectorXcd g(n);
      g[0] = cplx(1.0, 0.0);
      for (int i = 0; i < m; ++i) {
        const double theta = 0.5 * kPi * pu(k * m + i, 0);
        g[i + 1] = cplx(std::cos(theta), std::sin(theta));
      }
      blocks.emplace_back(std::move(g));
    }
    return StackedSignal{std::move(blocks)};
  }
}

MeasurementStack generate_agn(const StackedSignal& truth, const AgnParams& params,
                              std::uint64_t seed, int threads) {
  if (!(params.sigma >= 0.0)) throw ValidationError("generate_agn: sigma < 0");
  const int n = truth.n(), T = truth.T();
  const std::uint64_t agn_key = CounterRng::derive(seed, kDomainAgn);
  const double c = 1.0 / std::sqrt(2.0);  // CN(0,1): N(0,1/2) per component
  std::vector<MatrixXcd> blocks(T);
  parallel_for(T, threads, [&](std::int64_t k) {
    const VectorXcd& g = truth.block(static_cast<int>(k)).values();
    MatrixXcd B = g * g.adjoint();
    CounterRng rng{CounterRng::derive(agn_key, static_cast<std::uint64_t>(k))};
    for (int i = 0; i < n; ++i) {
      B(i, i) = cplx(0.0, 0.0);
      for (int j = i + 1; j < n; ++j) {
        double x, y;
        rng.next_gaussian_pair(x, y);
        B(i, j) += params.sigma * cplx(c * x, c * y);
        B(j, i) = std::conj(B(i, j));
      }
    }
    blocks[k] = std::move(B);
  });
  return MeasurementStack{std::move(blocks)};
}

MeasurementStack generate_outliers(const StackedSignal& truth,
                                   const OutliersParams& params, std::uint64_t seed,
                                   int threads) {
  const int n = truth.n(), T = truth.T();
  const auto& p = checked_p(params, T);
  const double eta = params.eta;
  const std::uint64_t out_key = CounterRng::derive(seed, kDomainOutliers);
  std::vector<MatrixXcd> blocks(T);
  parallel_for(T, threads, [&](std::int64_t k) {
    const VectorXcd& g = truth.block(static_cast<int>(k)).values();
    const double pk = p_at(p, static_cast<int>(k));
    MatrixXcd B = MatrixXcd::Zero(n, n);
    CounterRng rng{CounterRng::derive(out_key, static_cast<std::uint64_t>(k))};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double u = rng.next_unit();
        const double phase_u = rng.next_unit();  // always drawn: fixed draw count
        cplx v(0.0, 0.0);
        if (u < (1.0 - eta) * pk) {
          v = g[i] * std::conj(g[j]);
        } else if (u < pk) {
          const double phi = 2.0 * kPi * phase_u;
          v = cplx(std::cos(phi), std::sin(phi));
        }
        B(i, j) = v;
        B(j, i) = std::conj(v);
      }
    blocks[k] = std::move(B);
  });
  return MeasurementStack{std::move(blocks)};
}

}  // namespace dynsync
