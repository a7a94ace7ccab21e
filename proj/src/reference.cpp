#include "dynsync/reference.hpp"

#include <cmath>

#include "dynsync/errors.hpp"
#include "dynsync/rng.hpp"

namespace dynsync::reference {

Eigen::MatrixXd projector_matrix(const PathSpectralBasis& basis, int tau, int n) {
  if (tau < 1 || tau > basis.T())
    throw ValidationError("projector_matrix: tau outside [1, T]");
  const int T = basis.T();
  const Eigen::MatrixXd Vt = basis.vectors().leftCols(tau);
  const Eigen::MatrixXd Pt = Vt * Vt.transpose();  // T x T
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * T,
                                            static_cast<Eigen::Index>(n) * T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b)
      P.block(a * n, b * n, n, n) =
          Pt(a, b) * Eigen::MatrixXd::Identity(n, n);
  return P;
}

MatrixXcd apply_projector_dense(const PathSpectralBasis& basis, int tau, int n,
                                const MatrixXcd& X) {
  const Eigen::MatrixXd P = projector_matrix(basis, tau, n);
  if (X.rows() != P.rows())
    throw ValidationError("apply_projector_dense: shape mismatch");
  return P.cast<cplx>() * X;
}

StackedSignal naive_spectral_dense(const MeasurementStack& A) {
  std::vector<UnitSignal> blocks;
  blocks.reserve(A.T());
  for (int k = 0; k < A.T(); ++k) {
    const MatrixXcd& B = A.block(k);
    if (B.squaredNorm() == 0.0) {
      blocks.push_back(UnitSignal{VectorXcd::Ones(A.n())});
      continue;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(B);
    if (es.info() != Eigen::Success)
      throw NumericalError("naive_spectral_dense: eigensolver failed");
    blocks.push_back(anchor_block(es.eigenvectors().col(A.n() - 1)));
  }
  return StackedSignal{std::move(blocks)};
}

MeasurementStack generate_agn_reversed(const StackedSignal& truth,
                                       const AgnParams& params,
                                       std::uint64_t seed) {
  const int n = truth.n(), T = truth.T();
  const std::uint64_t agn_key = CounterRng::derive(seed, 2);  // same domain tag
  const double c = 1.0 / std::sqrt(2.0);
  std::vector<MatrixXcd> blocks(T);
  for (int k = T - 1; k >= 0; --k) {
    const VectorXcd& g = truth.block(k).values();
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
  }
  return MeasurementStack{std::move(blocks)};
}

}  // namespace dynsync::reference
