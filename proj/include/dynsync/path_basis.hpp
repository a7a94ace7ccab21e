#pragma once

#include <Eigen/Dense>

#include "dynsync/signal.hpp"

namespace dynsync {

// Eigendecomposition of the path-graph Laplacian on T vertices, in closed
// form: frequency j in [0, T) has eigenvalue 4 sin^2(j pi / (2T)) and
// eigenvector entries cos((i + 1/2) j pi / T), i in [0, T). Frequency 0 is
// the constant vector with eigenvalue 0. The cosine columns are run through
// one modified Gram-Schmidt pass to pin down orthonormality at machine
// precision.
class PathSpectralBasis {
 public:
  explicit PathSpectralBasis(int T);

  int T() const { return static_cast<int>(V_.rows()); }
  double eigenvalue(int freq) const { return lam_[freq]; }
  const Eigen::VectorXd& eigenvalues() const { return lam_; }
  // column j = eigenvector of frequency j (ascending eigenvalue)
  const Eigen::MatrixXd& vectors() const { return V_; }

 private:
  Eigen::VectorXd lam_;
  Eigen::MatrixXd V_;
};

PathSpectralBasis build_path_basis(int T);

// Orthogonal projector onto the tau lowest-frequency basis vectors, acting
// identically on each of the n coordinates of a stacked nT x m array. Applied
// as two thin matrix products per block; the nT x nT form is never built.
class SmoothProjector {
 public:
  SmoothProjector(const PathSpectralBasis& basis, int tau, int n);

  int tau() const { return tau_; }
  int n() const { return n_; }
  int T() const { return static_cast<int>(V_.rows()); }

  MatrixXcd apply(const MatrixXcd& X, int threads = 1) const;
  MatrixXcd apply_complement(const MatrixXcd& X, int threads = 1) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X, int threads = 1) const;
  Eigen::MatrixXd apply_complement(const Eigen::MatrixXd& X, int threads = 1) const;

 private:
  template <class Mat>
  Mat apply_impl(const Mat& X, int threads) const;

  int tau_, n_;
  Eigen::MatrixXd V_;  // T x tau, retained columns
};

inline MatrixXcd apply_projector(const SmoothProjector& P, const MatrixXcd& X,
                                 int threads = 1) {
  return P.apply(X, threads);
}
inline MatrixXcd apply_complement(const SmoothProjector& P, const MatrixXcd& X,
                                  int threads = 1) {
  return P.apply_complement(X, threads);
}

}  // namespace dynsync
