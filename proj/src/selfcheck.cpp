#include "dynsync/selfcheck.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "dynsync/errors.hpp"
#include "dynsync/estimators.hpp"
#include "dynsync/metrics.hpp"
#include "dynsync/path_basis.hpp"
#include "dynsync/reference.hpp"
#include "dynsync/rng.hpp"
#include "dynsync/selection.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/signal_io.hpp"
#include "dynsync/sweep.hpp"
#include "dynsync/synthgen.hpp"
#include "dynsync/trs.hpp"

namespace dynsync {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// a check body returns "" on success, a short diagnostic otherwise
using CheckFn = std::function<std::string()>;

void run_check(std::vector<CheckResult>& out, const std::string& name,
               const CheckFn& fn) {
  CheckResult r;
  r.name = name;
  try {
    r.detail = fn();
    r.pass = r.detail.empty();
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  out.push_back(std::move(r));
}

std::string fail(const std::string& msg) { return msg; }

std::string expect_near(const std::string& what, double got, double want,
                        double tol) {
  if (std::abs(got - want) <= tol) return "";
  std::ostringstream os;
  os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
  return os.str();
}

std::string expect_le(const std::string& what, double got, double cap) {
  if (got <= cap) return "";
  std::ostringstream os;
  os << what << ": " << got << " exceeds " << cap;
  return os.str();
}

VectorXcd random_unit_vector(CounterRng& rng, int n) {
  VectorXcd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = std::polar(1.0, 2.0 * M_PI * rng.next_unit());
  return v;
}

MatrixXcd random_hermitian(CounterRng& rng, int m) {
  MatrixXcd M(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      M(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
  return MatrixXcd((M + M.adjoint()) / 2.0);
}

VectorXcd random_cvector(CounterRng& rng, int m) {
  VectorXcd b(m);
  for (int i = 0; i < m; ++i)
    b[i] = cplx(rng.next_gaussian(), rng.next_gaussian());
  return b;
}

StackedSignal random_stack(CounterRng& rng, int n, int T) {
  std::vector<UnitSignal> blocks;
  for (int k = 0; k < T; ++k)
    blocks.push_back(anchor_block(random_unit_vector(rng, n)));
  return StackedSignal(std::move(blocks));
}

MeasurementStack clean_measurements(const StackedSignal& g) {
  return generate_agn(g, AgnParams{0.0}, 7, 1);
}

double max_modulus_error(const StackedSignal& g) {
  double worst = 0;
  for (int k = 0; k < g.T(); ++k)
    for (int i = 0; i < g.n(); ++i)
      worst = std::max(worst, std::abs(std::abs(g.block(k)[i]) - 1.0));
  return worst;
}

double stack_distance(const StackedSignal& a, const StackedSignal& b) {
  return (a.flatten() - b.flatten()).norm();
}

double stack_distance(const MeasurementStack& a, const MeasurementStack& b) {
  double s = 0;
  for (int k = 0; k < a.T(); ++k)
    s += (a.block(k) - b.block(k)).squaredNorm();
  return std::sqrt(s);
}

MatrixXd dense_path_laplacian(int T) {
  MatrixXd L = MatrixXd::Zero(T, T);
  for (int i = 0; i + 1 < T; ++i) {
    L(i, i) += 1;
    L(i + 1, i + 1) += 1;
    L(i, i + 1) -= 1;
    L(i + 1, i) -= 1;
  }
  return L;
}

// ---------------- individual checks ----------------

std::string check_circle_projection() {
  VectorXcd v(3);
  v << cplx(2, 0), cplx(0, 0), cplx(0, -1);
  VectorXcd p = project_to_circle(v);
  if (p[0] != cplx(1, 0) || p[1] != cplx(1, 0) || p[2] != cplx(0, -1))
    return fail("projection of (2, 0, -i) wrong");
  cplx q = project_to_circle(cplx(3, 4));
  if (std::abs(q - cplx(0.6, 0.8)) > 1e-15)
    return fail("projection of 3+4i is not 0.6+0.8i");
  CounterRng rng(11);
  VectorXcd w = random_cvector(rng, 40);
  VectorXcd once = project_to_circle(w);
  if ((project_to_circle(once) - once).norm() > 1e-15)
    return fail("projection is not idempotent");
  return "";
}

std::string check_block_anchoring() {
  VectorXcd v(3);
  v << cplx(0, 1), cplx(0, 1), cplx(-1, 0);
  UnitSignal a = anchor_block(v);
  if (a[0] != cplx(1, 0)) return fail("anchor did not pin first entry to 1");
  if (std::abs(a[1] - cplx(1, 0)) > 1e-15 || std::abs(a[2] - cplx(0, 1)) > 1e-15)
    return fail("anchor of (i, i, -1) is not (1, 1, i)");
  if (!a.is_anchored()) return fail("anchored block reports unanchored");
  return "";
}

std::string check_smoothness_values() {
  VectorXcd g1(2), g2(2);
  g1 << 1, 1;
  g2 << 1, -1;
  StackedSignal s({UnitSignal(g1), UnitSignal(g2)});
  if (auto e = expect_near("pair smoothness", smoothness_of(s), 4.0, 1e-14);
      !e.empty())
    return e;
  // sandwich 2 s <= matrix smoothness <= (2 + 4n) s on anchored stacks
  CounterRng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 3 + trial, T = 4 + trial;
    StackedSignal g = random_stack(rng, n, T);
    double sv = smoothness_of(g);
    double mv = matrix_smoothness_of(rank1_stack(g));
    if (mv < 2 * sv - 1e-9) return fail("matrix smoothness below 2x lower bound");
    if (mv > (2 + 4 * n) * sv + 1e-9)
      return fail("matrix smoothness above (2+4n)x upper bound");
  }
  return "";
}

std::string check_signal_io_roundtrip() {
  StackedSignal g = generate_smooth_truth({5, 7, 0.8}, 5);
  std::stringstream buf;
  save_signal(g, buf);
  StackedSignal h = load_signal(buf);
  if (stack_distance(g, h) != 0.0) return fail("signal round trip not bitwise");
  MeasurementStack A = generate_agn(g, AgnParams{1.5}, 5, 1);
  std::stringstream buf2;
  save_measurements(A, buf2);
  MeasurementStack B = load_measurements(buf2);
  if (stack_distance(A, B) != 0.0)
    return fail("measurement round trip not bitwise");
  VectorXcd flat = g.flatten();
  if (stack_distance(StackedSignal::from_flat(5, 7, flat), g) != 0.0)
    return fail("flatten/from_flat mismatch");
  if (stack_distance(StackedSignal::from_tail(5, 7, g.flatten_tail()), g) != 0.0)
    return fail("flatten_tail/from_tail mismatch");
  return "";
}

std::string check_input_validation() {
  bool threw = false;
  try {
    UnitSignal v{VectorXcd(0)};
  } catch (const ValidationError&) {
    threw = true;
  }
  if (!threw) return fail("empty block accepted");

  threw = false;
  try {
    MatrixXcd M = MatrixXcd::Zero(3, 3);
    M(0, 1) = 1.0;  // no conjugate partner
    MeasurementStack bad({M});
  } catch (const ValidationError&) {
    threw = true;
  }
  if (!threw) return fail("non-Hermitian block accepted");

  threw = false;
  try {
    std::stringstream buf("2,2\n1,1,0,1,0\n");  // block 1 incomplete, block 2 absent
    load_signal(buf);
  } catch (const ValidationError&) {
    threw = true;
  }
  if (!threw) return fail("incomplete signal file accepted");

  threw = false;
  try {
    PathSpectralBasis basis(4);
    SmoothProjector bad(basis, 5, 2);
  } catch (const ValidationError&) {
    threw = true;
  }
  if (!threw) return fail("projector order above T accepted");
  return "";
}

std::string check_path_basis_identities() {
  {
    PathSpectralBasis b(2);
    if (auto e = expect_near("T=2 eigenvalue 0", b.eigenvalue(0), 0.0, 1e-14);
        !e.empty())
      return e;
    if (auto e = expect_near("T=2 eigenvalue 1", b.eigenvalue(1), 2.0, 1e-14);
        !e.empty())
      return e;
  }
  {
    PathSpectralBasis b(4);
    if (auto e =
            expect_near("T=4 frequency-2 eigenvalue", b.eigenvalue(2), 2.0, 1e-14);
        !e.empty())
      return e;
  }
  for (int T : {1, 3, 8, 23}) {
    PathSpectralBasis b(T);
    const MatrixXd& V = b.vectors();
    double gram = (V.transpose() * V - MatrixXd::Identity(T, T)).norm();
    if (gram > 1e-12) return fail("basis not orthonormal at T=" + std::to_string(T));
    MatrixXd L = dense_path_laplacian(T);
    for (int j = 0; j < T; ++j) {
      double res = (L * V.col(j) - b.eigenvalue(j) * V.col(j)).norm();
      if (res > 1e-10)
        return fail("eigenpair residual " + std::to_string(res) + " at T=" +
                    std::to_string(T) + ", j=" + std::to_string(j));
    }
    for (int j = 0; j + 1 < T; ++j)
      if (b.eigenvalue(j) > b.eigenvalue(j + 1) + 1e-15)
        return fail("eigenvalues not ascending");
  }
  return "";
}

std::string check_projector_algebra() {
  CounterRng rng(31);
  const int n = 3, T = 9;
  PathSpectralBasis basis(T);
  MatrixXcd X(n * T, 2);
  X.col(0) = random_cvector(rng, n * T);
  X.col(1) = random_cvector(rng, n * T);
  for (int tau : {1, 3, 6, 9}) {
    SmoothProjector P(basis, tau, n);
    MatrixXcd PX = P.apply(X);
    MatrixXcd QX = P.apply_complement(X);
    if ((P.apply(PX) - PX).norm() > 1e-12 * X.norm())
      return fail("projector not idempotent at tau=" + std::to_string(tau));
    if ((PX + QX - X).norm() > 1e-12 * X.norm())
      return fail("P + complement != identity");
    double cross = std::abs((PX.col(0).adjoint() * QX.col(0))(0, 0));
    if (cross > 1e-10 * X.norm() * X.norm())
      return fail("range and corange not orthogonal");
    double lhs = X.col(0).squaredNorm();
    double rhs = PX.col(0).squaredNorm() + QX.col(0).squaredNorm();
    if (std::abs(lhs - rhs) > 1e-10 * lhs) return fail("Pythagoras violated");
  }
  SmoothProjector full(basis, T, n);
  if ((full.apply(X) - X).norm() > 1e-12 * X.norm())
    return fail("order-T projector is not the identity");
  // order-1 projection = per-coordinate time average
  SmoothProjector one(basis, 1, n);
  MatrixXcd Y = one.apply(X);
  for (int i = 0; i < n; ++i) {
    cplx mean = 0;
    for (int k = 0; k < T; ++k) mean += X(k * n + i, 0);
    mean /= double(T);
    for (int k = 0; k < T; ++k)
      if (std::abs(Y(k * n + i, 0) - mean) > 1e-12)
        return fail("order-1 projection is not the time average");
  }
  return "";
}

std::string check_projector_monotonicity() {
  CounterRng rng(41);
  const int n = 2, T = 12;
  PathSpectralBasis basis(T);
  MatrixXcd X(n * T, 1);
  X.col(0) = random_cvector(rng, n * T);
  double prev = -1;
  for (int tau = 1; tau <= T; ++tau) {
    SmoothProjector P(basis, tau, n);
    double nn = P.apply(X).norm();
    if (nn + 1e-12 < prev) return fail("projection norm decreased with order");
    prev = nn;
  }
  return "";
}

std::string check_projector_dense_reference(int threads) {
  CounterRng rng(51);
  const int n = 4, T = 10;
  PathSpectralBasis basis(T);
  MatrixXcd X(n * T, 3);
  for (int c = 0; c < 3; ++c) X.col(c) = random_cvector(rng, n * T);
  for (int tau : {1, 4, 10}) {
    SmoothProjector P(basis, tau, n);
    MatrixXcd fast = P.apply(X, threads);
    MatrixXcd slow = reference::apply_projector_dense(basis, tau, n, X);
    if ((fast - slow).norm() > 1e-10 * (1 + X.norm()))
      return fail("blockwise and dense projector disagree at tau=" +
                  std::to_string(tau));
    MatrixXd Pi = reference::projector_matrix(basis, tau, n);
    if ((Pi - Pi.transpose()).norm() > 1e-12) return fail("dense projector not symmetric");
    if ((Pi * Pi - Pi).norm() > 1e-10) return fail("dense projector not idempotent");
  }
  return "";
}

std::string check_truth_generator() {
  GroundTruthSpec spec{6, 11, 0.7};
  StackedSignal a = generate_smooth_truth(spec, 123);
  StackedSignal b = generate_smooth_truth(spec, 123);
  if (stack_distance(a, b) != 0.0) return fail("same seed gave different truths");
  StackedSignal c = generate_smooth_truth(spec, 124);
  if (stack_distance(a, c) == 0.0) return fail("different seeds gave equal truths");
  if (max_modulus_error(a) > 1e-12) return fail("truth entries leave the circle");
  for (int k = 0; k < a.T(); ++k)
    if (a.block(k)[0] != cplx(1, 0)) return fail("truth block not anchored");
  return "";
}

std::string check_truth_smoothness_cap() {
  // the generator's band-limiting plus the pi/2 phase map give
  // smoothness <= (pi^4 / 4) s_t; check with headroom
  struct Case {
    int T;
    double s_t;
  };
  for (Case cs : {Case{20, 0.05}, Case{20, 1.0}, Case{40, 1.0}, Case{12, 2.5}}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      StackedSignal g = generate_smooth_truth({10, cs.T, cs.s_t}, seed);
      double s = smoothness_of(g);
      if (auto e = expect_le("smoothness at T=" + std::to_string(cs.T),
                             s, 25.0 * cs.s_t);
          !e.empty())
        return e;
    }
  }
  return "";
}

std::string check_agn_generator() {
  StackedSignal g = generate_smooth_truth({30, 20, 1.0}, 3);
  MeasurementStack A1 = generate_agn(g, AgnParams{1.0}, 9, 1);
  MeasurementStack A2 = generate_agn(g, AgnParams{1.0}, 9, 1);
  if (stack_distance(A1, A2) != 0.0) return fail("same seed gave different noise");

  MeasurementStack clean = generate_agn(g, AgnParams{0.0}, 9, 1);
  for (int k = 0; k < g.T(); ++k) {
    const MatrixXcd& B = clean.block(k);
    MatrixXcd expect = g.block(k).values() * g.block(k).values().adjoint();
    expect.diagonal().setZero();
    if ((B - expect).norm() > 1e-12) return fail("sigma=0 block is not g g^H - I");
    if ((B - B.adjoint()).norm() != 0.0) return fail("block not exactly Hermitian");
    if (B.diagonal().norm() != 0.0) return fail("diagonal not exactly zero");
  }

  double sum2 = 0;
  std::size_t count = 0;
  for (int k = 0; k < g.T(); ++k) {
    MatrixXcd W = A1.block(k) - clean.block(k);
    for (int i = 0; i < g.n(); ++i)
      for (int j = i + 1; j < g.n(); ++j) {
        sum2 += std::norm(W(i, j));
        ++count;
      }
  }
  double mean2 = sum2 / double(count);
  if (mean2 < 0.9 || mean2 > 1.1)
    return fail("unit-sigma noise variance off: " + std::to_string(mean2));
  return "";
}

std::string check_agn_order_independence() {
  StackedSignal g = generate_smooth_truth({7, 9, 0.5}, 17);
  AgnParams p{2.0};
  MeasurementStack fwd = generate_agn(g, p, 33, 1);
  MeasurementStack rev = reference::generate_agn_reversed(g, p, 33);
  if (stack_distance(fwd, rev) != 0.0)
    return fail("reverse-order generation changed the draw");
  return "";
}

std::string check_outliers_generator() {
  StackedSignal g = generate_smooth_truth({12, 8, 0.5}, 6);
  OutliersParams clean_params;
  clean_params.eta = 0.0;
  clean_params.p = {1.0};
  MeasurementStack A = generate_outliers(g, clean_params, 4, 1);
  MeasurementStack expect = clean_measurements(g);
  if (stack_distance(A, expect) != 0.0)
    return fail("eta=0, p=1 does not reproduce the clean offsets");

  OutliersParams off;
  off.eta = 0.3;
  off.p = {0.0};
  MeasurementStack Z = generate_outliers(g, off, 4, 1);
  for (int k = 0; k < Z.T(); ++k)
    if (Z.block(k).norm() != 0.0) return fail("p=0 produced nonzero entries");

  OutliersParams half;
  half.eta = 0.5;
  half.p = {1.0};
  MeasurementStack H1 = generate_outliers(g, half, 4, 1);
  MeasurementStack H2 = generate_outliers(g, half, 4, 1);
  if (stack_distance(H1, H2) != 0.0) return fail("same seed gave different draws");
  std::size_t corrupted = 0, total = 0;
  for (int k = 0; k < g.T(); ++k)
    for (int i = 0; i < g.n(); ++i)
      for (int j = i + 1; j < g.n(); ++j) {
        cplx truth = g.block(k)[i] * std::conj(g.block(k)[j]);
        if (std::abs(H1.block(k)(i, j) - truth) > 1e-12) ++corrupted;
        ++total;
      }
  double frac = double(corrupted) / double(total);
  if (frac < 0.4 || frac > 0.6)
    return fail("eta=0.5 corrupted fraction off: " + std::to_string(frac));
  return "";
}

std::string check_trs_vs_oracle() {
  for (int trial = 0; trial < 30; ++trial) {
    CounterRng rng(CounterRng::derive(0xC0FFEE, std::uint64_t(trial)));
    const int m = 2 + int(rng.next_u64() % 11);
    MatrixXcd B = random_hermitian(rng, m);
    VectorXcd b = random_cvector(rng, m);
    if (trial % 3 == 1) b *= 1e-13;  // push toward the hard case
    if (trial % 3 == 2) b *= 10.0;
    const double r = 0.5 + 2.0 * rng.next_unit();
    TrsProblem prob = TrsProblem::from_dense(B, b, r);
    TrsSolution fast = solve_trs(prob);
    TrsSolution exact = solve_trs_dense_oracle(prob, 25);
    const double scale = std::max(1.0, std::abs(exact.objective));
    if (std::abs(fast.objective - exact.objective) > 1e-6 * scale)
      return fail("objective gap " +
                  std::to_string(fast.objective - exact.objective) +
                  " on trial " + std::to_string(trial));
    if (fast.radius_error > 1e-6)
      return fail("radius error " + std::to_string(fast.radius_error));
    double opn = B.norm();
    if (fast.kkt_residual > 1e-6 * (opn * r + b.norm() + 1))
      return fail("stationarity residual " + std::to_string(fast.kkt_residual));
    if (fast.multiplier < exact.lambda_max - 1e-6 * (1 + opn))
      return fail("multiplier below the top eigenvalue");
  }
  return "";
}

std::string check_trs_hard_case() {
  {
    MatrixXcd B = MatrixXcd::Zero(2, 2);
    B(0, 0) = 2;
    B(1, 1) = 1;
    TrsProblem prob = TrsProblem::from_dense(B, VectorXcd::Zero(2), 1.0);
    TrsSolution s = solve_trs(prob);
    if (auto e = expect_near("b=0 objective", s.objective, 2.0, 1e-8); !e.empty())
      return e;
    if (s.status != TrsStatus::hard_case)
      return fail(std::string("b=0 status is ") + to_string(s.status));
  }
  {
    MatrixXcd B = MatrixXcd::Zero(3, 3);
    B(0, 0) = 2;
    B(1, 1) = 2;
    B(2, 2) = 1;
    VectorXcd b = VectorXcd::Zero(3);
    b[2] = 0.1;  // orthogonal to the top eigenspace
    TrsProblem prob = TrsProblem::from_dense(B, b, 1.0);
    TrsSolution fast = solve_trs(prob);
    TrsSolution exact = solve_trs_dense_oracle(prob, 25);
    if (std::abs(fast.objective - exact.objective) > 1e-7)
      return fail("hard-case objective mismatch");
    if (fast.status != TrsStatus::hard_case)
      return fail(std::string("status is ") + to_string(fast.status));
    if (std::abs(fast.z.norm() - 1.0) > 1e-8) return fail("hard-case radius off");
  }
  return "";
}

std::string check_trs_phase_covariance() {
  CounterRng rng(61);
  MatrixXcd B = random_hermitian(rng, 6);
  VectorXcd b = random_cvector(rng, 6);
  const double r = 1.7;
  TrsSolution s1 = solve_trs(TrsProblem::from_dense(B, b, r));
  const cplx phase = std::polar(1.0, 1.234);
  TrsSolution s2 = solve_trs(TrsProblem::from_dense(B, phase * b, r));
  if (std::abs(s1.objective - s2.objective) > 1e-8 * (1 + std::abs(s1.objective)))
    return fail("objective changed under a global phase");
  if ((s2.z - phase * s1.z).norm() > 1e-6 * r)
    return fail("solution did not rotate with the phase");
  return "";
}

std::string check_trs_real_embedding() {
  CounterRng rng(71);
  const int m = 6;
  MatrixXcd B = random_hermitian(rng, m);
  VectorXcd b = random_cvector(rng, m);
  const double r = 1.3;
  TrsSolution zc = solve_trs_dense_oracle(TrsProblem::from_dense(B, b, r), 25);

  MatrixXcd R(2 * m, 2 * m);
  R.topLeftCorner(m, m) = B.real().cast<cplx>();
  R.topRightCorner(m, m) = (-B.imag()).cast<cplx>();
  R.bottomLeftCorner(m, m) = B.imag().cast<cplx>();
  R.bottomRightCorner(m, m) = B.real().cast<cplx>();
  VectorXcd br(2 * m);
  br.head(m) = b.real().cast<cplx>();
  br.tail(m) = b.imag().cast<cplx>();
  TrsSolution zr = solve_trs_dense_oracle(TrsProblem::from_dense(R, br, r), 25);
  if (std::abs(zc.objective - zr.objective) > 1e-9 * (1 + std::abs(zc.objective)))
    return fail("real 2m embedding changed the optimum");
  return "";
}

std::string check_trs_degenerate_inputs() {
  {
    TrsProblem prob =
        TrsProblem::from_dense(MatrixXcd::Zero(4, 4), VectorXcd::Zero(4), 2.0);
    TrsSolution s = solve_trs(prob);
    if (std::abs(s.z.norm() - 2.0) > 1e-9) return fail("B=0,b=0 radius off");
    if (std::abs(s.objective) > 1e-12) return fail("B=0,b=0 objective nonzero");
  }
  {
    VectorXcd b(3);
    b << cplx(0, 1), cplx(2, 0), cplx(0, 0);
    TrsProblem prob = TrsProblem::from_dense(MatrixXcd::Zero(3, 3), b, 1.5);
    TrsSolution s = solve_trs(prob);
    if ((s.z - 1.5 * b / b.norm()).norm() > 1e-8)
      return fail("B=0 solution is not the scaled linear term");
    if (auto e = expect_near("B=0 objective", s.objective, 2 * 1.5 * b.norm(),
                             1e-8);
        !e.empty())
      return e;
  }
  {
    MatrixXcd B = -2.0 * MatrixXcd::Identity(3, 3);
    VectorXcd b = VectorXcd::Zero(3);
    b[0] = 0.1;
    TrsProblem prob = TrsProblem::from_dense(B, b, 1.0);
    TrsSolution s = solve_trs(prob);
    if (s.status != TrsStatus::interior_free)
      return fail(std::string("negative-definite status is ") +
                  to_string(s.status));
    if (auto e = expect_near("negative-definite objective", s.objective, -1.8,
                             1e-8);
        !e.empty())
      return e;
  }
  return "";
}

std::string check_estimator_clean_exactness(int threads) {
  StackedSignal g = generate_smooth_truth({6, 5, 0.9}, 77);
  MeasurementStack A = clean_measurements(g);
  const int T = g.T();
  struct Named {
    const char* name;
    StackedSignal est;
  };
  std::vector<Named> fits;
  fits.push_back({"naive-spectral", estimate_naive_spectral(A, threads)});
  fits.push_back({"gmd-spectral", estimate_gmd_spectral(A, T, threads)});
  fits.push_back({"gmd-ltrs", estimate_gmd_ltrs(A, T, {}, threads)});
  fits.push_back({"ltrs-gs", estimate_ltrs_gs(A, T, {}, threads)});
  fits.push_back({"gtrs", estimate_gtrs(A, 0.0, {}, threads)});
  for (const auto& f : fits) {
    double err = rmse(g, f.est);
    if (err > 1e-7)
      return fail(std::string(f.name) + " clean rmse " + std::to_string(err));
  }
  return "";
}

std::string check_estimator_output_contract(int threads) {
  StackedSignal g = generate_smooth_truth({8, 6, 0.5}, 99);
  MeasurementStack A = generate_agn(g, AgnParams{2.0}, 99, 1);
  std::vector<StackedSignal> fits;
  fits.push_back(estimate_naive_spectral(A, threads));
  fits.push_back(estimate_gmd_spectral(A, 3, threads));
  fits.push_back(estimate_gmd_ltrs(A, 3, {}, threads));
  fits.push_back(estimate_ltrs_gs(A, 3, {}, threads));
  fits.push_back(estimate_gtrs(A, 5.0, {}, threads));
  fits.push_back(estimate_ppm(A, 5.0, fits[0], 20, threads));
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (max_modulus_error(fits[i]) > 1e-12)
      return fail("estimate " + std::to_string(i) + " leaves the circle");
    for (int k = 0; k < fits[i].T(); ++k)
      if (fits[i].block(k)[0] != cplx(1, 0))
        return fail("estimate " + std::to_string(i) + " not anchored");
  }
  return "";
}

std::string check_gmd_ltrs_full_order(int threads) {
  StackedSignal g = generate_smooth_truth({7, 5, 1.2}, 13);
  MeasurementStack A = generate_agn(g, AgnParams{1.0}, 13, 1);
  StackedSignal a = estimate_gmd_ltrs(A, g.T(), {}, threads);
  StackedSignal b = estimate_ltrs_gs(A, g.T(), {}, threads);
  if (stack_distance(a, b) > 1e-8)
    return fail("order-T smoothing changed the per-block solutions");
  return "";
}

std::string check_hermitianize_contraction() {
  CounterRng rng(81);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5;
    MatrixXcd target = random_hermitian(rng, n);
    MatrixXcd noisy(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        noisy(i, j) = target(i, j) + 0.3 * cplx(rng.next_gaussian(),
                                                rng.next_gaussian());
    DenoisedStack d(n, {noisy});
    double before = (noisy - target).norm();
    d.hermitianize();
    double after = (d.block(0) - target).norm();
    if (after > before + 1e-12)
      return fail("symmetrization moved away from a Hermitian target");
  }
  return "";
}

std::string check_ppm_fixed_point(int threads) {
  StackedSignal g = generate_smooth_truth({8, 4, 0.5}, 55);
  MeasurementStack A = clean_measurements(g);
  StackedSignal out = estimate_ppm(A, 0.0, g, 50, threads);
  double worst = 0;
  for (int k = 0; k < g.T(); ++k)
    for (int i = 0; i < g.n(); ++i)
      worst = std::max(worst, std::abs(out.block(k)[i] - g.block(k)[i]));
  if (worst > 1e-12)
    return fail("clean truth moved by " + std::to_string(worst));
  return "";
}

std::string check_zero_data_convention(int threads) {
  const int n = 5, T = 4;
  std::vector<MatrixXcd> blocks(T, MatrixXcd::Zero(n, n));
  MeasurementStack A(std::move(blocks));
  StackedSignal ones(n, T);
  std::vector<StackedSignal> fits;
  fits.push_back(estimate_naive_spectral(A, threads));
  fits.push_back(estimate_gmd_spectral(A, 2, threads));
  fits.push_back(estimate_gmd_ltrs(A, 2, {}, threads));
  fits.push_back(estimate_ltrs_gs(A, 2, {}, threads));
  fits.push_back(estimate_gtrs(A, 3.0, {}, threads));
  fits.push_back(estimate_ppm(A, 3.0, ones, 10, threads));
  for (std::size_t i = 0; i < fits.size(); ++i)
    if (stack_distance(fits[i], ones) != 0.0)
      return fail("zero data did not map to all-ones (estimate " +
                  std::to_string(i) + ")");
  return "";
}

std::string check_thread_invariance() {
  StackedSignal g = generate_smooth_truth({10, 8, 0.8}, 42);
  MeasurementStack A1 = generate_agn(g, AgnParams{1.5}, 42, 1);
  MeasurementStack A2 = generate_agn(g, AgnParams{1.5}, 42, 2);
  if (stack_distance(A1, A2) != 0.0)
    return fail("generation depends on the thread count");
  StackedSignal e1 = estimate_gmd_ltrs(A1, 3, {}, 1);
  StackedSignal e2 = estimate_gmd_ltrs(A2, 3, {}, 2);
  if (stack_distance(e1, e2) != 0.0)
    return fail("gmd-ltrs depends on the thread count");
  PathSpectralBasis basis(8);
  SmoothProjector P(basis, 3, 10);
  MatrixXcd X = A1.stacked();
  if ((P.apply(X, 1) - P.apply(X, 2)).norm() != 0.0)
    return fail("projector depends on the thread count");
  return "";
}

std::string check_beta_grid_examples() {
  {
    BetaGrid g = build_beta_grid(100);
    std::vector<double> want = {0,  1,  2,  3,    4,     5,    6,
                                7,  8,  9,  10,   12.75, 15.5, 18.25,
                                21, 40.75, 60.5, 80.25, 100};
    if (g.betas.size() != want.size())
      return fail("T=100 grid has " + std::to_string(g.betas.size()) +
                  " points, want " + std::to_string(want.size()));
    for (std::size_t i = 0; i < want.size(); ++i)
      if (std::abs(g.betas[i] - want[i]) > 1e-12)
        return fail("T=100 grid point " + std::to_string(i) + " is " +
                    std::to_string(g.betas[i]));
  }
  {
    BetaGrid g = build_beta_grid(2);
    std::vector<double> want = {0, 1, 1.25, 1.5, 1.75, 2};
    if (g.betas.size() != want.size()) return fail("T=2 grid size wrong");
    for (std::size_t i = 0; i < want.size(); ++i)
      if (std::abs(g.betas[i] - want[i]) > 1e-12) return fail("T=2 grid wrong");
  }
  {
    BetaGrid g = build_beta_grid(1);
    if (g.betas != std::vector<double>({0, 1})) return fail("T=1 grid wrong");
  }
  if (tau_for_beta(1.5, 100) != 2) return fail("tau(1.5) != 2");
  if (tau_for_beta(100, 100) != 100) return fail("tau(100) != 100");
  if (tau_for_beta(0, 7) != 1) return fail("tau(0) != 1");
  return "";
}

std::string check_fidelity_values() {
  const int n = 4, T = 3;
  StackedSignal g = generate_smooth_truth({n, T, 0.6}, 8);
  MeasurementStack A = clean_measurements(g);
  double fid = data_fidelity(A, g);
  if (auto e = expect_near("clean fidelity", fid, double(T * n * (n - 1)), 1e-9);
      !e.empty())
    return e;

  // brute force on the anchored coordinates against an unrelated signal
  CounterRng rng(91);
  StackedSignal h = random_stack(rng, n, T);
  double brute = 0;
  for (int k = 0; k < T; ++k) {
    const MatrixXcd& B = A.block(k);
    for (int i = 1; i < n; ++i)
      for (int j = 1; j < n; ++j)
        brute += std::real(std::conj(h.block(k)[i]) * B(i, j) * h.block(k)[j]);
    for (int i = 1; i < n; ++i)
      brute += 2.0 * std::real(std::conj(h.block(k)[i]) * B(i, 0));
  }
  if (auto e = expect_near("brute-force fidelity", data_fidelity(A, h), brute,
                           1e-9 * (1 + std::abs(brute)));
      !e.empty())
    return e;
  return "";
}

std::string check_selection_rules() {
  if (select_beta_argmax({1.0, 3.0, 3.0, 2.0}) != 1)
    return fail("argmax tie not resolved to the smaller index");
  BetaGrid grid;
  grid.betas = {0, 1, 2, 3};
  if (select_beta_slope_change(grid, {0.0, 10.0, 12.0, 13.0}) != 1)
    return fail("slope-change knee not found");
  bool threw = false;
  try {
    BetaGrid two;
    two.betas = {0, 1};
    select_beta_slope_change(two, {0.0, 1.0});
  } catch (const ValidationError&) {
    threw = true;
  }
  if (!threw) return fail("slope change on 2 points accepted");
  return "";
}

std::string check_rmse_values() {
  StackedSignal g = generate_smooth_truth({5, 6, 0.4}, 19);
  if (rmse(g, g) != 0.0) return fail("rmse of identical stacks nonzero");
  VectorXcd a(2), b(2);
  a << 1, cplx(0, 1);
  b << 1, 1;
  StackedSignal ga({UnitSignal(a)});
  StackedSignal gb({UnitSignal(b)});
  if (auto e = expect_near("two-point rmse", rmse(ga, gb), 1.0, 1e-12);
      !e.empty())
    return e;
  return "";
}

std::string check_tau_star_values() {
  if (tau_star_agn(30, 20, 0.05, 3.0) != 1) return fail("agn example 1 wrong");
  if (tau_star_agn(30, 100, 1.0, 3.0) != 4) return fail("agn example 2 wrong");
  if (tau_star_agn(30, 20, 0.05, 0.0) != 20) return fail("sigma=0 must give T");
  if (tau_star_agn(30, 20, 0.0, 3.0) != 1) return fail("s_t=0 must give 1");
  int prev = 1 << 28;
  for (double sigma : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    int t = tau_star_agn(30, 100, 1.0, sigma);
    if (t > prev) return fail("tau* not nonincreasing in sigma");
    prev = t;
  }

  double q = bernoulli_subg_width(0.2);
  double want_q = std::sqrt((1 - 0.4) / (4 * std::log(0.8 / 0.2)));
  if (auto e = expect_near("subgaussian width at 0.2", q, want_q, 1e-12);
      !e.empty())
    return e;
  if (bernoulli_subg_width(0.0) != 0 || bernoulli_subg_width(1.0) != 0)
    return fail("width at p in {0,1} must vanish");
  if (auto e = expect_near("width at 1/2", bernoulli_subg_width(0.5),
                           std::sqrt(0.125), 1e-12);
      !e.empty())
    return e;

  OutliersParams op;
  op.eta = 0.2;
  op.p = {0.2};
  OutlierNoiseStats st = outlier_noise_stats(op);
  if (auto e = expect_near("d_bar", st.d_bar, 0.16, 1e-12); !e.empty()) return e;
  if (auto e = expect_near("V", st.V, 0.16, 1e-12); !e.empty()) return e;
  if (tau_star_outliers(30, 20, 0.05, st, 1.0, 0.1) != 1)
    return fail("outliers example wrong");
  return "";
}

std::string check_bias_bound() {
  for (double s_t : {0.05, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      StackedSignal g = generate_smooth_truth({10, 20, s_t}, seed);
      for (int tau : {1, 4, 10, 20}) {
        BiasDiagnostic d = bias_diagnostic(g, tau);
        if (tau == 20) {
          if (d.measured > 1e-18) return fail("full order left residual energy");
          continue;
        }
        if (d.measured > d.bound + 1e-9)
          return fail("bias bound violated at tau=" + std::to_string(tau));
      }
    }
  }
  return "";
}

std::string check_sweep_determinism() {
  ExperimentConfig cfg;
  cfg.model = Model::agn;
  cfg.n = 4;
  cfg.T_list = {3, 4};
  cfg.st = StRule{StRule::Kind::constant, 0.5};
  cfg.sigma = 1.0;
  cfg.estimators = {"ltrs-gs", "naive-spectral"};
  cfg.mc_runs = 2;
  cfg.seed = 5;
  cfg.threads = 1;
  auto render = [&](const std::vector<RunRecord>& recs) {
    std::ostringstream os;
    write_records_csv(os, cfg, "sweep-t", recs);
    return os.str();
  };
  std::string a = render(run_sweep_T(cfg));
  std::string b = render(run_sweep_T(cfg));
  if (a != b) return fail("repeat run changed the CSV");
  cfg.threads = 2;
  std::string c = render(run_sweep_T(cfg));
  if (a != c) return fail("thread count changed the CSV");
  if (a.find("failed") != std::string::npos)
    return fail("tiny sweep contains failed runs");
  return "";
}

}  // namespace

std::vector<CheckResult> run_selftest_checks(int threads) {
  std::vector<CheckResult> out;
  run_check(out, "circle-projection", check_circle_projection);
  run_check(out, "block-anchoring", check_block_anchoring);
  run_check(out, "smoothness-values", check_smoothness_values);
  run_check(out, "signal-io-roundtrip", check_signal_io_roundtrip);
  run_check(out, "input-validation", check_input_validation);
  run_check(out, "path-basis-identities", check_path_basis_identities);
  run_check(out, "projector-algebra", check_projector_algebra);
  run_check(out, "projector-monotonicity", check_projector_monotonicity);
  run_check(out, "projector-dense-reference",
            [&] { return check_projector_dense_reference(threads); });
  run_check(out, "truth-generator", check_truth_generator);
  run_check(out, "truth-smoothness-cap", check_truth_smoothness_cap);
  run_check(out, "agn-generator", check_agn_generator);
  run_check(out, "agn-order-independence", check_agn_order_independence);
  run_check(out, "outliers-generator", check_outliers_generator);
  run_check(out, "trs-vs-oracle", check_trs_vs_oracle);
  run_check(out, "trs-hard-case", check_trs_hard_case);
  run_check(out, "trs-phase-covariance", check_trs_phase_covariance);
  run_check(out, "trs-real-embedding", check_trs_real_embedding);
  run_check(out, "trs-degenerate-inputs", check_trs_degenerate_inputs);
  run_check(out, "estimator-clean-exactness",
            [&] { return check_estimator_clean_exactness(threads); });
  run_check(out, "estimator-output-contract",
            [&] { return check_estimator_output_contract(threads); });
  run_check(out, "gmd-ltrs-full-order",
            [&] { return check_gmd_ltrs_full_order(threads); });
  run_check(out, "hermitianize-contraction", check_hermitianize_contraction);
  run_check(out, "ppm-fixed-point", [&] { return check_ppm_fixed_point(threads); });
  run_check(out, "zero-data-convention",
            [&] { return check_zero_data_convention(threads); });
  run_check(out, "thread-invariance", check_thread_invariance);
  run_check(out, "beta-grid-examples", check_beta_grid_examples);
  run_check(out, "fidelity-values", check_fidelity_values);
  run_check(out, "selection-rules", check_selection_rules);
  run_check(out, "rmse-values", check_rmse_values);
  run_check(out, "tau-star-values", check_tau_star_values);
  run_check(out, "bias-bound", check_bias_bound);
  run_check(out, "sweep-determinism", check_sweep_determinism);
  return out;
}

bool run_selftest(int threads, std::ostream& os) {
  std::vector<CheckResult> results = run_selftest_checks(threads);
  bool all = true;
  for (const auto& r : results) {
    if (r.pass) {
      os << "[PASS] " << r.name << "\n";
    } else {
      all = false;
      os << "[FAIL] " << r.name << " (" << r.detail << ")\n";
    }
  }
  os << (all ? "selftest: all " : "selftest: FAILURES among ")
     << results.size() << " checks" << (all ? " passed" : "") << "\n";
  return all;
}

}  // namespace dynsync
