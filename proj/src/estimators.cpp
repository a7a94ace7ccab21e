#include "dynsync/estimators.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "dynsync/errors.hpp"
#include "dynsync/parallel.hpp"
#include "dynsync/path_basis.hpp"

namespace dynsync {

namespace {

// y = blockdiag(A~(k)) x - lambda (L (x) I) x, L the path Laplacian over blocks
struct GlobalOperator {
  int m = 0, T = 0;
  double lambda = 0;
  int threads = 1;
  std::vector<MatrixXcd> blocks;
  VectorXcd bstack;

  GlobalOperator(const MeasurementStack& A, double lam, int nthreads)
      : m(A.n() - 1), T(A.T()), lambda(lam), threads(nthreads) {
    blocks.resize(T);
    bstack.resize(static_cast<Eigen::Index>(m) * T);
    for (int k = 0; k < T; ++k) {
      MatrixXcd Atil;
      VectorXcd b;
      A.anchored_split(k, Atil, b);
      blocks[k] = std::move(Atil);
      bstack.segment(k * m, m) = b;
    }
  }

  void apply(const VectorXcd& x, VectorXcd& y) const {
    y.resize(x.size());
    parallel_for(T, threads, [&](std::int64_t k) {
      auto xk = x.segment(k * m, m);
      auto yk = y.segment(k * m, m);
      yk.noalias() = blocks[k] * xk;
      if (lambda != 0.0) {
        const double deg = (T == 1) ? 0.0 : ((k == 0 || k == T - 1) ? 1.0 : 2.0);
        yk -= (lambda * deg) * xk;
        if (k > 0) yk += lambda * x.segment((k - 1) * m, m);
        if (k < T - 1) yk += lambda * x.segment((k + 1) * m, m);
      }
    });
  }
};

bool is_zero_block(const MatrixXcd& B) { return B.squaredNorm() == 0.0; }

// per-block anchored sphere solve; the all-zero block short-circuits to the
// all-ones convention
VectorXcd solve_block(const MatrixXcd& Atil, const VectorXcd& b, int k,
                      const TrsOptions& opts) {
  const Eigen::Index m = Atil.rows();
  if (Atil.squaredNorm() == 0.0 && b.squaredNorm() == 0.0)
    return VectorXcd::Ones(m);
  TrsProblem p = TrsProblem::from_dense(Atil, b, std::sqrt(double(m)));
  TrsSolution sol = solve_trs(p, opts);
  if (sol.status == TrsStatus::failed)
    throw NumericalError("block " + std::to_string(k) +
                         ": sphere solve failed, radius error " +
                         std::to_string(sol.radius_error));
  return sol.z;
}

StackedSignal anchored_from_blocks(std::vector<VectorXcd> raw) {
  std::vector<UnitSignal> blocks;
  blocks.reserve(raw.size());
  for (auto& v : raw) blocks.push_back(anchor_block(v));
  return StackedSignal{std::move(blocks)};
}

}  // namespace

VectorXcd top_eigenvector(const MatrixXcd& H, const PowerIterOptions& opts) {
  const Eigen::Index m = H.rows();
  if (m < 1 || H.cols() != m) throw ValidationError("top_eigenvector: bad shape");
  VectorXcd v(m);
  for (Eigen::Index i = 0; i < m; ++i)
    v[i] = cplx(1.0 + 1e-6 * double(i + 1) / double(m), 0.0);
  v.normalize();
  const double shift = H.cwiseAbs().rowwise().sum().maxCoeff();  // >= spectral radius
  if (shift == 0.0) return v;  // zero block: any unit vector
  VectorXcd w(m);
  for (int it = 0; it < opts.max_iters; ++it) {
    w.noalias() = H * v;
    const double theta = v.dot(w).real();
    if ((w - theta * v).norm() <= opts.tol * shift) return v;
    w += shift * v;
    const double nw = w.norm();
    if (nw == 0.0) break;  // v in the kernel of H + shift I
    v = w / nw;
  }
  if (m <= opts.dense_fallback_dim) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
    if (es.info() == Eigen::Success) return es.eigenvectors().col(m - 1);
  }
  throw NumericalError("top_eigenvector: no convergence after " +
                       std::to_string(opts.max_iters) + " iterations");
}

StackedSignal estimate_naive_spectral(const MeasurementStack& A, int threads,
                                      const PowerIterOptions& opts) {
  const int n = A.n(), T = A.T();
  std::vector<VectorXcd> out(T);
  parallel_for(T, threads, [&](std::int64_t k) {
    const MatrixXcd& B = A.block(static_cast<int>(k));
    out[k] = is_zero_block(B) ? VectorXcd::Ones(n) : top_eigenvector(B, opts);
  });
  return anchored_from_blocks(std::move(out));
}

DenoisedStack denoise_stack(const MeasurementStack& A, int tau, int threads) {
  const PathSpectralBasis basis{A.T()};
  const SmoothProjector proj{basis, tau, A.n()};
  DenoisedStack d = DenoisedStack::from_stacked(A.n(), proj.apply(A.stacked(), threads));
  d.hermitianize();
  return d;
}

StackedSignal estimate_gmd_spectral(const MeasurementStack& A, int tau, int threads,
                                    const PowerIterOptions& opts) {
  const int n = A.n(), T = A.T();
  const DenoisedStack d = denoise_stack(A, tau, threads);
  std::vector<VectorXcd> out(T);
  parallel_for(T, threads, [&](std::int64_t k) {
    const MatrixXcd& B = d.block(static_cast<int>(k));
    out[k] = is_zero_block(B) ? VectorXcd::Ones(n) : top_eigenvector(B, opts);
  });
  return anchored_from_blocks(std::move(out));
}

StackedSignal estimate_gmd_ltrs(const MeasurementStack& A, int tau,
                                const TrsOptions& opts, int threads) {
  const int n = A.n(), T = A.T();
  const int m = n - 1;
  const DenoisedStack d = denoise_stack(A, tau, threads);
  VectorXcd tail(static_cast<Eigen::Index>(m) * T);
  parallel_for(T, threads, [&](std::int64_t k) {
    const MatrixXcd& B = d.block(static_cast<int>(k));
    const MatrixXcd Atil = B.bottomRightCorner(m, m);
    const VectorXcd b = B.col(0).tail(m);
    tail.segment(k * m, m) = solve_block(Atil, b, static_cast<int>(k), opts);
  });
  return StackedSignal::from_tail(n, T, tail);
}

MatrixXcd local_sphere_solutions(const MeasurementStack& A, const TrsOptions& opts,
                                 int threads) {
  const int n = A.n(), T = A.T();
  const int m = n - 1;
  MatrixXcd locals(m, T);
  parallel_for(T, threads, [&](std::int64_t k) {
    MatrixXcd Atil;
    VectorXcd b;
    A.anchored_split(static_cast<int>(k), Atil, b);
    locals.col(k) = solve_block(Atil, b, static_cast<int>(k), opts);
  });
  return locals;
}

StackedSignal ltrs_gs_from_locals(const MatrixXcd& locals, int tau, int threads) {
  const int m = static_cast<int>(locals.rows());
  const int T = static_cast<int>(locals.cols());
  const int n = m + 1;
  const PathSpectralBasis basis{T};
  const SmoothProjector proj{basis, tau, m};
  MatrixXcd stacked(static_cast<Eigen::Index>(m) * T, 1);
  for (int k = 0; k < T; ++k) stacked.block(k * m, 0, m, 1) = locals.col(k);
  const MatrixXcd smoothed = proj.apply(stacked, threads);
  return StackedSignal::from_tail(n, T, smoothed.col(0));
}

StackedSignal estimate_ltrs_gs(const MeasurementStack& A, int tau,
                               const TrsOptions& opts, int threads) {
  return ltrs_gs_from_locals(local_sphere_solutions(A, opts, threads), tau, threads);
}

TrsProblem global_sync_problem(const MeasurementStack& A, double lambda,
                               int threads) {
  if (lambda < 0) throw ValidationError("global_sync_problem: lambda < 0");
  const int m = A.n() - 1;
  const int T = A.T();
  auto op = std::make_shared<GlobalOperator>(A, lambda, threads);
  TrsProblem p;
  p.dim = static_cast<Eigen::Index>(m) * T;
  p.linear = op->bstack;
  p.radius = std::sqrt(double(m) * T);
  p.apply = [op](const VectorXcd& x, VectorXcd& y) { op->apply(x, y); };
  if (lambda > 0) {
    // shifted solves preconditioned in the path-Laplacian eigenbasis, where
    // the smoothness part of the operator is diagonal
    auto basis = std::make_shared<PathSpectralBasis>(T);
    auto Vc = std::make_shared<MatrixXcd>(basis->vectors().cast<cplx>());
    auto lam = std::make_shared<Eigen::VectorXd>(basis->eigenvalues());
    p.shifted_precond = [Vc, lam, lambda, m,
                         T](double mu) -> std::function<void(const VectorXcd&, VectorXcd&)> {
      const double mueff = std::max(mu, 1e-8 * (1.0 + lambda));
      auto w = std::make_shared<VectorXcd>(
          (mueff + lambda * lam->array()).inverse().matrix().cast<cplx>());
      return [Vc, w, m, T](const VectorXcd& x, VectorXcd& y) {
        y.resize(x.size());
        Eigen::Map<const MatrixXcd> Xm(x.data(), m, T);
        Eigen::Map<MatrixXcd> Ym(y.data(), m, T);
        MatrixXcd W = Xm * (*Vc);
        W = W * w->asDiagonal();
        Ym.noalias() = W * Vc->transpose();
      };
    };
  }
  return p;
}

StackedSignal estimate_gtrs(const MeasurementStack& A, double lambda,
                            const TrsOptions& opts, int threads) {
  const int n = A.n(), T = A.T();
  if (A.frobenius_norm() == 0.0) return StackedSignal{n, T};
  TrsProblem p = global_sync_problem(A, lambda, threads);
  TrsSolution sol = solve_trs(p, opts);
  if (sol.status == TrsStatus::failed)
    throw NumericalError("gtrs: global sphere solve failed, radius error " +
                         std::to_string(sol.radius_error));
  return StackedSignal::from_tail(n, T, sol.z);
}

StackedSignal estimate_ppm(const MeasurementStack& A, double lambda,
                           const StackedSignal& init, int iters, int threads) {
  const int n = A.n(), T = A.T();
  if (init.n() != n || init.T() != T)
    throw ValidationError("estimate_ppm: init shape mismatch");
  if (iters < 0) throw ValidationError("estimate_ppm: iters < 0");
  if (A.frobenius_norm() == 0.0) return StackedSignal{n, T};
  const int m = n - 1;
  const GlobalOperator op{A, lambda, threads};
  VectorXcd g = init.flatten_tail();
  VectorXcd y(g.size());
  const double stop = 1e-10 * std::sqrt(double(m) * T);
  for (int s = 0; s < iters; ++s) {
    op.apply(g, y);
    y += op.bstack;
    VectorXcd gnew = project_to_circle(y);
    const double step = (gnew - g).norm();
    g = std::move(gnew);
    if (step <= stop) break;
  }
  return StackedSignal::from_tail(n, T, g);
}

}  // namespace dynsync
