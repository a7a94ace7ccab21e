#include "dynsync/path_basis.hpp"

#include <cmath>

#include "dynsync/errors.hpp"
#include "dynsync/parallel.hpp"

namespace dynsync {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

PathSpectralBasis::PathSpectralBasis(int T) {
  if (T < 1) throw ValidationError("PathSpectralBasis: need T >= 1");
  lam_.resize(T);
  V_.resize(T, T);
  for (int j = 0; j < T; ++j) {
    const double s = std::sin(0.5 * j * kPi / T);
    lam_[j] = 4.0 * s * s;
    for (int i = 0; i < T; ++i) V_(i, j) = std::cos((i + 0.5) * j * kPi / T);
    V_.col(j).normalize();
  }
  // one modified Gram-Schmidt pass over the analytic columns
  for (int j = 0; j < T; ++j) {
    for (int i = 0; i < j; ++i) V_.col(j) -= V_.col(i).dot(V_.col(j)) * V_.col(i);
    V_.col(j).normalize();
  }
}

PathSpectralBasis build_path_basis(int T) { return PathSpectralBasis{T}; }

SmoothProjector::SmoothProjector(const PathSpectralBasis& basis, int tau, int n)
    : tau_(tau), n_(n) {
  if (tau < 1 || tau > basis.T())
    throw ValidationError("SmoothProjector: tau outside [1, T]");
  if (n < 1) throw ValidationError("SmoothProjector: need n >= 1");
  V_ = basis.vectors().leftCols(tau);
}

template <class Mat>
Mat SmoothProjector::apply_impl(const Mat& X, int threads) const {
  using Scalar = typename Mat::Scalar;
  const int T = this->T();
  if (X.rows() != static_cast<Eigen::Index>(n_) * T)
    throw ValidationError("SmoothProjector: stacked array has wrong row count");
  Mat Y(X.rows(), X.cols());
  using Inner = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Inner V = V_.template cast<Scalar>();
  parallel_for(X.cols(), threads, [&](std::int64_t c) {
    Eigen::Map<const Inner> Xc(X.col(c).data(), n_, T);
    Eigen::Map<Inner> Yc(Y.col(c).data(), n_, T);
    Inner W = Xc * V;  // n x tau coefficient block
    Yc.noalias() = W * V.transpose();
  });
  return Y;
}

MatrixXcd SmoothProjector::apply(const MatrixXcd& X, int threads) const {
  return apply_impl(X, threads);
}

MatrixXcd SmoothProjector::apply_complement(const MatrixXcd& X, int threads) const {
  return X - apply_impl(X, threads);
}

Eigen::MatrixXd SmoothProjector::apply(const Eigen::MatrixXd& X, int threads) const {
  return apply_impl(X, threads);
}

Eigen::MatrixXd SmoothProjector::apply_complement(const Eigen::MatrixXd& X,
                                                  int threads) const {
  return X - apply_impl(X, threads);
}

}  // namespace dynsync
