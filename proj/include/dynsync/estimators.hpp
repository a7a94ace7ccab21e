#pragma once

#include "dynsync/signal.hpp"
#include "dynsync/trs.hpp"

namespace dynsync {

struct PowerIterOptions {
  double tol = 1e-10;  // eigenvector residual target
  int max_iters = 5000;
  int dense_fallback_dim = 64;  // dense eigensolve rescue for blocks this small
};

// Top eigenvector of a Hermitian matrix by shifted power iteration from the
// deterministic start (1 + tiny index ramp), falling back to a dense
// eigensolve for small blocks when the iteration stalls.
VectorXcd top_eigenvector(const MatrixXcd& H, const PowerIterOptions& opts = {});

// Per-block top-eigenvector synchronization of the raw measurement blocks,
// each block anchored so its first coordinate is 1.
StackedSignal estimate_naive_spectral(const MeasurementStack& A, int threads = 1,
                                      const PowerIterOptions& opts = {});

// Smooth the stacked measurements with the order-tau projector, then run the
// per-block spectral sync on the smoothed blocks.
StackedSignal estimate_gmd_spectral(const MeasurementStack& A, int tau,
                                    int threads = 1,
                                    const PowerIterOptions& opts = {});

// Smooth the stacked measurements, then solve one anchored sphere problem
// (radius sqrt(n-1)) per smoothed block.
StackedSignal estimate_gmd_ltrs(const MeasurementStack& A, int tau,
                                const TrsOptions& opts = {}, int threads = 1);

// Solve one anchored sphere problem per raw block, stack the solutions, and
// smooth the stack with the order-tau projector.
StackedSignal estimate_ltrs_gs(const MeasurementStack& A, int tau,
                               const TrsOptions& opts = {}, int threads = 1);

// One global sphere problem of radius sqrt((n-1)T) coupling all blocks
// through the smoothness penalty lambda.
StackedSignal estimate_gtrs(const MeasurementStack& A, double lambda,
                            const TrsOptions& opts = {}, int threads = 1);

// Projected power refinements of an initial estimate; each sweep applies the
// penalized data operator and projects entrywise back to the circle. Stops
// early once successive iterates agree to 1e-10 * sqrt((n-1)T).
StackedSignal estimate_ppm(const MeasurementStack& A, double lambda,
                           const StackedSignal& init, int iters = 50,
                           int threads = 1);

// building blocks shared by the estimators, the grid search, and tests

// column k = solution of the anchored sphere problem for block k
MatrixXcd local_sphere_solutions(const MeasurementStack& A,
                                 const TrsOptions& opts = {}, int threads = 1);

// smoothing + reanchoring stage applied to stacked per-block solutions
StackedSignal ltrs_gs_from_locals(const MatrixXcd& locals, int tau,
                                  int threads = 1);

// order-tau smoothing of the stacked blocks, Hermitianized
DenoisedStack denoise_stack(const MeasurementStack& A, int tau, int threads = 1);

// the penalized quadratic over the anchored coordinates:
// blockdiag(A~(k)) - lambda * (path Laplacian (x) I), linear term from the
// anchored columns, radius sqrt((n-1)T)
TrsProblem global_sync_problem(const MeasurementStack& A, double lambda,
                               int threads = 1);

}  // namespace dynsync
