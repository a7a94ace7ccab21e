#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dynsync/estimators.hpp"
#include "dynsync/path_basis.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/synthgen.hpp"

// Plain single-threaded reference implementations. They trade speed for
// obviousness and act as independent oracles for the optimized OpenMP
// kernels, in tests and in the kernel benchmark.
namespace dynsync::reference {

// the full nT x nT projector matrix the blockwise kernel refuses to build
Eigen::MatrixXd projector_matrix(const PathSpectralBasis& basis, int tau, int n);

// dense-matrix application of the order-tau projector
MatrixXcd apply_projector_dense(const PathSpectralBasis& basis, int tau, int n,
                                const MatrixXcd& X);

// per-block sync through dense Hermitian eigensolves, no power iteration
StackedSignal naive_spectral_dense(const MeasurementStack& A);

// same distribution as generate_agn, blocks generated in reverse time order;
// equality with the forward kernel demonstrates counter-stream independence
MeasurementStack generate_agn_reversed(const StackedSignal& truth,
                                       const AgnParams& params, std::uint64_t seed);

}  // namespace dynsync::reference
