#include "dynsync/signal.hpp"

#include <cmath>
#include <utility>

#include "dynsync/errors.hpp"

namespace dynsync {

cplx project_to_circle(cplx z) {
  const double m = std::abs(z);
  if (m == 0.0) return cplx(1.0, 0.0);
  return z / m;
}

VectorXcd project_to_circle(const VectorXcd& v) {
  VectorXcd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = project_to_circle(v[i]);
  return out;
}

UnitSignal::UnitSignal(VectorXcd values) : v_(std::move(values)) {
  if (v_.size() == 0) throw ValidationError("UnitSignal: empty block");
  for (Eigen::Index i = 0; i < v_.size(); ++i) v_[i] = project_to_circle(v_[i]);
}

UnitSignal UnitSignal::anchored(const VectorXcd& values) {
  return anchor_block(values);
}

bool UnitSignal::is_anchored(double tol) const {
  return std::abs(v_[0] - cplx(1.0, 0.0)) <= tol;
}

UnitSignal anchor_block(const VectorXcd& unit_values) {
  if (unit_values.size() == 0) throw ValidationError("anchor_block: empty block");
  UnitSignal s{unit_values};
  const cplx first = s.values()[0];  // unit modulus after ingestion
  VectorXcd rotated = s.values() * std::conj(first);
  rotated[0] = cplx(1.0, 0.0);
  return UnitSignal{std::move(rotated)};
}

StackedSignal::StackedSignal(int n, int T) : n_(n) {
  if (n < 1 || T < 1) throw ValidationError("StackedSignal: need n >= 1, T >= 1");
  blocks_.reserve(T);
  for (int k = 0; k < T; ++k) blocks_.emplace_back(VectorXcd::Ones(n));
}

StackedSignal::StackedSignal(std::vector<UnitSignal> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ValidationError("StackedSignal: no blocks");
  n_ = blocks_[0].n();
  for (const auto& b : blocks_)
    if (b.n() != n_) throw ValidationError("StackedSignal: unequal block lengths");
}

VectorXcd StackedSignal::flatten() const {
  VectorXcd out(static_cast<Eigen::Index>(n_) * T());
  for (int k = 0; k < T(); ++k) out.segment(k * n_, n_) = blocks_[k].values();
  return out;
}

VectorXcd StackedSignal::flatten_tail() const {
  const int m = n_ - 1;
  if (m < 1) throw ValidationError("flatten_tail: need n >= 2");
  VectorXcd out(static_cast<Eigen::Index>(m) * T());
  for (int k = 0; k < T(); ++k) out.segment(k * m, m) = blocks_[k].values().tail(m);
  return out;
}

StackedSignal StackedSignal::from_flat(int n, int T, const VectorXcd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(n) * T)
    throw ValidationError("from_flat: size mismatch");
  std::vector<UnitSignal> blocks;
  blocks.reserve(T);
  for (int k = 0; k < T; ++k)
    blocks.emplace_back(VectorXcd(flat.segment(k * n, n)));
  return StackedSignal{std::move(blocks)};
}

StackedSignal StackedSignal::from_tail(int n, int T, const VectorXcd& tail) {
  const int m = n - 1;
  if (m < 1 || tail.size() != static_cast<Eigen::Index>(m) * T)
    throw ValidationError("from_tail: size mismatch");
  std::vector<UnitSignal> blocks;
  blocks.reserve(T);
  for (int k = 0; k < T; ++k) {
    VectorXcd v(n);
    v[0] = cplx(1.0, 0.0);
    v.tail(m) = tail.segment(k * m, m);
    blocks.emplace_back(std::move(v));
  }
  return StackedSignal{std::move(blocks)};
}

MeasurementStack::MeasurementStack(std::vector<MatrixXcd> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ValidationError("MeasurementStack: no blocks");
  n_ = static_cast<int>(blocks_[0].rows());
  if (n_ < 2) throw ValidationError("MeasurementStack: need n >= 2");
  for (auto& B : blocks_) {
    if (B.rows() != n_ || B.cols() != n_)
      throw ValidationError("MeasurementStack: blocks must be n x n");
    const double scale = B.norm();
    const double herm_err = (B - B.adjoint()).norm();
    if (herm_err > 1e-12 * (scale + 1.0))
      throw ValidationError("MeasurementStack: block not Hermitian");
    for (int i = 0; i < n_; ++i)
      if (std::abs(B(i, i)) > 1e-12 * (scale + 1.0))
        throw ValidationError("MeasurementStack: nonzero diagonal");
    // rebuild from the strict upper triangle: exact invariants
    for (int i = 0; i < n_; ++i) {
      B(i, i) = cplx(0.0, 0.0);
      for (int j = i + 1; j < n_; ++j) B(j, i) = std::conj(B(i, j));
    }
  }
}

MatrixXcd MeasurementStack::stacked() const {
  MatrixXcd out(static_cast<Eigen::Index>(n_) * T(), n_);
  for (int k = 0; k < T(); ++k) out.middleRows(k * n_, n_) = blocks_[k];
  return out;
}

void MeasurementStack::anchored_split(int k, MatrixXcd& Atil, VectorXcd& b) const {
  const MatrixXcd& A = blocks_.at(k);
  const int m = n_ - 1;
  Atil = A.bottomRightCorner(m, m);
  b = A.col(0).tail(m);
}

double MeasurementStack::frobenius_norm() const {
  double s = 0;
  for (const auto& B : blocks_) s += B.squaredNorm();
  return std::sqrt(s);
}

DenoisedStack::DenoisedStack(int n, std::vector<MatrixXcd> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ValidationError("DenoisedStack: no blocks");
  for (const auto& B : blocks_)
    if (B.rows() != n_ || B.cols() != n_)
      throw ValidationError("DenoisedStack: blocks must be n x n");
}

void DenoisedStack::hermitianize() {
  for (auto& B : blocks_) B = 0.5 * (B + B.adjoint()).eval();
  hermitianized_ = true;
}

DenoisedStack DenoisedStack::from_stacked(int n, const MatrixXcd& stacked) {
  if (n < 1 || stacked.rows() % n != 0 || stacked.cols() != n)
    throw ValidationError("DenoisedStack: bad stacked shape");
  const int T = static_cast<int>(stacked.rows() / n);
  std::vector<MatrixXcd> blocks;
  blocks.reserve(T);
  for (int k = 0; k < T; ++k) blocks.emplace_back(stacked.middleRows(k * n, n));
  return DenoisedStack{n, std::move(blocks)};
}

double smoothness_of(const StackedSignal& g) {
  double s = 0;
  for (int k = 0; k + 1 < g.T(); ++k)
    s += (g.block(k).values() - g.block(k + 1).values()).squaredNorm();
  return s;
}

std::vector<MatrixXcd> rank1_stack(const StackedSignal& g) {
  std::vector<MatrixXcd> out;
  out.reserve(g.T());
  for (int k = 0; k < g.T(); ++k) {
    const VectorXcd& v = g.block(k).values();
    out.emplace_back(v * v.adjoint());
  }
  return out;
}

double matrix_smoothness_of(const std::vector<MatrixXcd>& G) {
  double s = 0;
  for (std::size_t k = 0; k + 1 < G.size(); ++k) s += (G[k] - G[k + 1]).squaredNorm();
  return s;
}

}  // namespace dynsync
