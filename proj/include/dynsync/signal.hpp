#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace dynsync {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// entrywise z / |z|, with the convention 0 -> 1
VectorXcd project_to_circle(const VectorXcd& v);
cplx project_to_circle(cplx z);

// One time block of n phases. Entries are unit modulus: inputs within 1e-12
// of the circle are expected, but every entry is renormalized on ingestion
// rather than rejected (file round-trips may round the last bit).
class UnitSignal {
 public:
  explicit UnitSignal(VectorXcd values);

  // rotate by the inverse phase of the first entry so it becomes exactly 1
  static UnitSignal anchored(const VectorXcd& values);

  int n() const { return static_cast<int>(v_.size()); }
  const VectorXcd& values() const { return v_; }
  cplx operator[](int i) const { return v_[i]; }
  bool is_anchored(double tol = 1e-12) const;

 private:
  VectorXcd v_;
};

// rotate a unit-modulus vector so its first entry is 1 (phase of a zero
// first entry is taken as 0)
UnitSignal anchor_block(const VectorXcd& unit_values);

// Time series of unit signals g(0..T-1), equal length n per block.
class StackedSignal {
 public:
  StackedSignal(int n, int T);  // all-ones
  explicit StackedSignal(std::vector<UnitSignal> blocks);

  int n() const { return n_; }
  int T() const { return static_cast<int>(blocks_.size()); }
  const UnitSignal& block(int k) const { return blocks_[k]; }
  UnitSignal& block(int k) { return blocks_[k]; }

  VectorXcd flatten() const;       // length n*T, block k at rows [k*n, (k+1)*n)
  VectorXcd flatten_tail() const;  // length (n-1)*T, first entry of each block dropped

  static StackedSignal from_flat(int n, int T, const VectorXcd& flat);
  // blocks of (1, tail(k)) from a length (n-1)*T stack
  static StackedSignal from_tail(int n, int T, const VectorXcd& tail);

 private:
  int n_;
  std::vector<UnitSignal> blocks_;
};

// Pairwise phase-offset measurements: one Hermitian n x n block per time
// step with exactly zero diagonal. Construction validates Hermitian symmetry
// (1e-12 relative) and diagonal magnitude (1e-12), then rewrites the block
// from its strict upper triangle so both invariants hold exactly.
class MeasurementStack {
 public:
  explicit MeasurementStack(std::vector<MatrixXcd> blocks);

  int n() const { return n_; }
  int T() const { return static_cast<int>(blocks_.size()); }
  const MatrixXcd& block(int k) const { return blocks_[k]; }

  MatrixXcd stacked() const;  // nT x n, block k at rows [k*n, (k+1)*n)

  // strip the anchored coordinate: Atil = block(k)(1:, 1:), b = block(k)(1:, 0)
  void anchored_split(int k, MatrixXcd& Atil, VectorXcd& b) const;

  double frobenius_norm() const;

 private:
  int n_;
  std::vector<MatrixXcd> blocks_;
};

// Time-smoothed measurement blocks. No Hermitian or zero-diagonal guarantee
// until hermitianize() replaces each block by (B + B^H) / 2.
class DenoisedStack {
 public:
  DenoisedStack(int n, std::vector<MatrixXcd> blocks);

  int n() const { return n_; }
  int T() const { return static_cast<int>(blocks_.size()); }
  const MatrixXcd& block(int k) const { return blocks_[k]; }
  bool hermitianized() const { return hermitianized_; }

  void hermitianize();

  static DenoisedStack from_stacked(int n, const MatrixXcd& stacked);

 private:
  int n_;
  bool hermitianized_ = false;
  std::vector<MatrixXcd> blocks_;
};

// sum_k ||g(k) - g(k+1)||^2
double smoothness_of(const StackedSignal& g);

// G(k) = g(k) g(k)^H
std::vector<MatrixXcd> rank1_stack(const StackedSignal& g);

// sum_k ||G(k) - G(k+1)||_F^2
double matrix_smoothness_of(const std::vector<MatrixXcd>& G);

}  // namespace dynsync
