#include "dynsync/trs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "dynsync/errors.hpp"
#include "dynsync/rng.hpp"

namespace dynsync {

const char* to_string(TrsStatus s) {
  switch (s) {
    case TrsStatus::boundary: return "boundary";
    case TrsStatus::interior_free: return "interior-free";
    case TrsStatus::hard_case: return "hard-case";
    case TrsStatus::failed: return "failed";
  }
  return "unknown";
}

TrsProblem TrsProblem::from_dense(MatrixXcd B, VectorXcd b, double radius) {
  if (B.rows() != B.cols()) throw ValidationError("TrsProblem: B must be square");
  if (b.size() != B.rows()) throw ValidationError("TrsProblem: b size mismatch");
  TrsProblem p;
  p.dim = B.rows();
  p.dense = std::move(B);
  p.linear = std::move(b);
  p.radius = radius;
  return p;
}

namespace {

struct Op {
  std::function<void(const VectorXcd&, VectorXcd&)> fn;
  mutable long count = 0;
  void operator()(const VectorXcd& x, VectorXcd& y) const {
    fn(x, y);
    ++count;
  }
};

Op make_op(const TrsProblem& p) {
  Op op;
  if (p.apply) {
    op.fn = p.apply;
  } else if (p.dense) {
    const MatrixXcd* B = &*p.dense;
    op.fn = [B](const VectorXcd& x, VectorXcd& y) { y.noalias() = (*B) * x; };
  } else {
    throw ValidationError("TrsProblem: neither apply nor dense form given");
  }
  return op;
}

void validate(const TrsProblem& p) {
  if (p.dim < 1) throw ValidationError("TrsProblem: dim < 1");
  if (p.linear.size() != p.dim) throw ValidationError("TrsProblem: b size mismatch");
  if (!(p.radius > 0)) throw ValidationError("TrsProblem: radius must be positive");
}

VectorXcd seeded_unit(Eigen::Index m, std::uint64_t seed) {
  CounterRng rng{CounterRng::derive(seed, 0xA5A5A5A5ULL)};
  VectorXcd v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double x, y;
    rng.next_gaussian_pair(x, y);
    v[i] = cplx(x, y);
  }
  const double nrm = v.norm();
  if (nrm == 0.0) return VectorXcd::Unit(m, 0);
  return v / nrm;
}

struct LanczosResult {
  double theta = 0;     // top Ritz value
  VectorXcd u;          // its Ritz vector, unit norm
  double residual = 0;  // ||B u - theta u||
  double opnorm = 0;    // max |Ritz value| seen: operator norm proxy
  bool converged = false;
};

LanczosResult lanczos_top(const Op& A, Eigen::Index m, const TrsOptions& o) {
  const int kdim =
      static_cast<int>(std::min<Eigen::Index>(std::max(2, o.lanczos_dim), m));
  VectorXcd v = seeded_unit(m, o.start_seed);
  LanczosResult out;
  MatrixXcd V(m, kdim + 1);
  Eigen::VectorXd alpha(kdim), beta(kdim);
  VectorXcd w(m), tmp(m);
  for (int restart = 0; restart <= o.lanczos_restarts; ++restart) {
    V.col(0) = v;
    int j = 0;
    bool invariant = false;
    for (; j < kdim; ++j) {
      A(V.col(j), w);
      if (j > 0) w -= beta[j - 1] * V.col(j - 1);
      alpha[j] = V.col(j).dot(w).real();
      w -= alpha[j] * V.col(j);
      for (int pass = 0; pass < 2; ++pass)  // full reorthogonalization
        for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
      beta[j] = w.norm();
      const double scale =
          std::max({std::abs(alpha[j]), j > 0 ? beta[j - 1] : 0.0, 1e-300});
      if (beta[j] <= 1e-14 * scale) {
        ++j;
        invariant = true;
        break;
      }
      V.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd Tj = Eigen::MatrixXd::Zero(j, j);
    for (int i = 0; i < j; ++i) {
      Tj(i, i) = alpha[i];
      if (i + 1 < j) Tj(i, i + 1) = Tj(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tj);
    const double theta = es.eigenvalues()(j - 1);
    out.opnorm =
        std::max({out.opnorm, std::abs(es.eigenvalues()(0)), std::abs(theta)});
    VectorXcd u = V.leftCols(j) * es.eigenvectors().col(j - 1).cast<cplx>();
    u.normalize();
    A(u, tmp);
    out.theta = theta;
    out.u = std::move(u);
    out.residual = (tmp - theta * out.u).norm();
    if (invariant || out.residual <= o.lanczos_rtol * std::max({std::abs(theta),
                                         1e-3 * out.opnorm, 1e-300})) {
      out.converged = true;
      break;
    }
    v = out.u;
  }
  return out;
}

struct CgResult {
  bool pd = true;  // false: nonpositive curvature met, shift not above lambda_max
  int iters = 0;
  double relres = 1.0;
};

using Precond = std::function<void(const VectorXcd&, VectorXcd&)>;

// PCG on (mu I - B) x = rhs; `deflate` confines the iteration to the
// orthogonal complement of one vector
CgResult cg_shifted(const Op& A, double mu, const VectorXcd& rhs, VectorXcd& x,
                    const VectorXcd* deflate, const Precond* M, int max_iters,
                    double rtol) {
  const Eigen::Index m = rhs.size();
  CgResult out;
  const double rhsn = rhs.norm();
  if (rhsn == 0.0) {
    x = VectorXcd::Zero(m);
    out.relres = 0;
    return out;
  }
  if (x.size() != m) x = VectorXcd::Zero(m);
  auto defl = [&](VectorXcd& vec) {
    if (deflate) vec -= (*deflate) * deflate->dot(vec);
  };
  defl(x);
  VectorXcd t(m), r(m), z(m), p(m), Ap(m);
  A(x, t);
  r = rhs - (mu * x - t);
  defl(r);
  if (M) (*M)(r, z);
  else z = r;
  defl(z);
  p = z;
  double rz = r.dot(z).real();
  double rn = r.norm();
  while (out.iters < max_iters && rn > rtol * rhsn) {
    if (!(rz > 0)) break;  // preconditioner breakdown; keep current iterate
    A(p, t);
    Ap = mu * p - t;
    defl(Ap);
    const double pAp = p.dot(Ap).real();
    if (!(pAp > 0)) {
      out.pd = false;
      out.relres = rn / rhsn;
      return out;
    }
    const double a = rz / pAp;
    x += a * p;
    r -= a * Ap;
    defl(r);
    if (M) (*M)(r, z);
    else z = r;
    defl(z);
    const double rz2 = r.dot(z).real();
    p = z + (rz2 / rz) * p;
    rz = rz2;
    rn = r.norm();
    ++out.iters;
  }
  out.relres = rn / rhsn;
  return out;
}

TrsStatus classify(double mu, bool hard) {
  if (hard) return TrsStatus::hard_case;
  return mu < 0 ? TrsStatus::interior_free : TrsStatus::boundary;
}

// objective / kkt / radius diagnostics from the final iterate
void finalize(const Op& A, const TrsProblem& p, TrsSolution& sol) {
  VectorXcd Bz(p.dim);
  A(sol.z, Bz);
  sol.kkt_residual = (Bz + p.linear - sol.multiplier * sol.z).norm();
  sol.objective = sol.z.dot(Bz).real() + 2.0 * p.linear.dot(sol.z).real();
  sol.radius_error = std::abs(sol.z.norm() - p.radius) / p.radius;
}

}  // namespace

double trs_objective(const TrsProblem& problem, const VectorXcd& z) {
  Op A = make_op(problem);
  VectorXcd Bz(problem.dim);
  A(z, Bz);
  return z.dot(Bz).real() + 2.0 * problem.linear.dot(z).real();
}

TrsSolution solve_trs(const TrsProblem& problem, const TrsOptions& opts) {
  validate(problem);
  const Op A = make_op(problem);
  const Eigen::Index m = problem.dim;
  const double r = problem.radius;
  const VectorXcd& b = problem.linear;
  const double bnorm = b.norm();

  TrsSolution sol;
  const LanczosResult top = lanczos_top(A, m, opts);
  sol.lambda_max = top.theta;
  sol.lambda_max_residual = top.residual;

  // pure eigenvector problem
  if (bnorm == 0.0) {
    sol.z = r * top.u;
    sol.multiplier = top.theta;
    sol.status = TrsStatus::hard_case;
    finalize(A, problem, sol);
    sol.matvecs = A.count;
    return sol;
  }

  const double scale = std::max({top.opnorm, bnorm / r, 1.0});
  auto make_precond = [&](double mu) -> std::unique_ptr<Precond> {
    if (!problem.shifted_precond) return nullptr;
    return std::make_unique<Precond>(problem.shifted_precond(mu));
  };

  double lo = top.theta;  // root is strictly above lambda_max
  double width = bnorm / r;
  double hi = lo + width;

  // hard-case probe: b numerically orthogonal to the top eigenvector, or so
  // small that the boundary root sits below the eigenvalue resolution
  const cplx top_coef = top.u.dot(b);
  const bool tiny_b = bnorm <= 1e-9 * scale * r;
  if (std::abs(top_coef) <= opts.hard_case_rtol * bnorm || tiny_b) {
    const double delta = 1e-9 * scale;
    const cplx phase =
        top_coef == cplx(0, 0) ? cplx(1, 0) : top_coef / std::abs(top_coef);
    VectorXcd bd = b - top.u * top_coef;
    VectorXcd x = VectorXcd::Zero(m);
    auto M = make_precond(top.theta + delta);
    const CgResult cr = cg_shifted(A, top.theta + delta, bd, x, &top.u, M.get(),
                                   opts.max_cg, opts.cg_rtol);
    if (cr.pd && x.norm() < r) {
      const double alpha = std::sqrt(r * r - x.squaredNorm());
      sol.z = x + (alpha * phase) * top.u;
      sol.multiplier = top.theta;
      sol.status = TrsStatus::hard_case;
      finalize(A, problem, sol);
      sol.matvecs = A.count;
      return sol;
    }
    if (tiny_b) {  // b cannot move the optimum off the eigenvector
      sol.z = (r * phase) * top.u;
      sol.multiplier = top.theta;
      sol.status = TrsStatus::hard_case;
      finalize(A, problem, sol);
      sol.matvecs = A.count;
      return sol;
    }
    if (cr.pd) lo = top.theta + delta;  // limit norm >= r: genuine root above
  }

  // safeguarded secular iteration on h(mu) = 1/||z(mu)|| - 1/r
  VectorXcd z = VectorXcd::Zero(m);
  VectorXcd best_z;
  double best_err = std::numeric_limits<double>::infinity();
  double best_mu = hi;
  bool have_hi = false;  // hi confirmed on the ||z|| <= r side
  double mu = hi;
  double prev_mu = 0, prev_h = 0;
  bool have_prev = false;

  for (int it = 0; it < opts.max_newton; ++it) {
    sol.newton_iters = it + 1;
    auto M = make_precond(mu);
    const CgResult cr =
        cg_shifted(A, mu, b, z, nullptr, M.get(), opts.max_cg, opts.cg_rtol);
    if (!cr.pd) {
      lo = std::max(lo, mu);
      z = VectorXcd::Zero(m);
      have_prev = false;
      if (have_hi) {
        mu = 0.5 * (lo + hi);
      } else {
        width *= 2;
        hi = lo + width;
        mu = hi;
      }
      continue;
    }
    const double N = z.norm();
    const double err = std::abs(N - r) / r;
    if (err < best_err) {
      best_err = err;
      best_z = z;
      best_mu = mu;
    }
    if (err <= opts.tol) break;
    if (N > r) {
      lo = std::max(lo, mu);
    } else {
      hi = have_hi ? std::min(hi, mu) : mu;
      have_hi = true;
    }
    if (!have_hi) {  // every probe so far sat on the ||z|| > r side
      width *= 2;
      hi = lo + width;
      mu = hi;
      have_prev = false;
      continue;
    }
    const double h = 1.0 / N - 1.0 / r;
    double next;
    if (have_prev && h != prev_h) {
      next = mu - h * (mu - prev_mu) / (h - prev_h);  // secant
    } else {
      next = lo + N * (mu - lo) / r;  // one-pole model N(mu) ~ c/(mu - lo)
    }
    prev_mu = mu;
    prev_h = h;
    have_prev = true;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == mu) break;  // bracket machine-tight
    mu = next;
  }

  if (best_z.size() == 0) {
    best_z = VectorXcd::Zero(m);
    best_err = std::numeric_limits<double>::infinity();
  }
  sol.z = std::move(best_z);
  sol.multiplier = best_mu;
  sol.status = best_err <= opts.tol ? classify(best_mu, false) : TrsStatus::failed;
  finalize(A, problem, sol);
  sol.matvecs = A.count;
  return sol;
}

TrsSolution solve_trs_dense_oracle(const TrsProblem& problem, int certify_samples) {
  validate(problem);
  if (problem.dim > 200)
    throw ValidationError("solve_trs_dense_oracle: dimension capped at 200");
  MatrixXcd B;
  if (problem.dense) {
    B = *problem.dense;
  } else {
    // materialize through the operator
    B.resize(problem.dim, problem.dim);
    VectorXcd e = VectorXcd::Zero(problem.dim), col(problem.dim);
    for (Eigen::Index j = 0; j < problem.dim; ++j) {
      e[j] = 1.0;
      problem.apply(e, col);
      B.col(j) = col;
      e[j] = 0.0;
    }
  }
  if ((B - B.adjoint()).norm() > 1e-10 * (B.norm() + 1.0))
    throw ValidationError("solve_trs_dense_oracle: B not Hermitian");
  B = 0.5 * (B + B.adjoint()).eval();

  const Eigen::Index m = problem.dim;
  const double r = problem.radius;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(B);
  if (es.info() != Eigen::Success)
    throw NumericalError("solve_trs_dense_oracle: eigensolver failed");
  const Eigen::VectorXd lam = es.eigenvalues();  // ascending
  const MatrixXcd& U = es.eigenvectors();
  const double lmax = lam[m - 1];
  const double spread = std::max({std::abs(lam[0]), std::abs(lmax), 1e-300});

  TrsSolution sol;
  sol.lambda_max = lmax;

  const VectorXcd bh = U.adjoint() * problem.linear;
  const double bnorm = problem.linear.norm();

  double btop2 = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (lam[i] >= lmax - 1e-10 * spread) btop2 += std::norm(bh[i]);

  auto norm_at = [&](double mu) {
    double s = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = mu - lam[i];
      s += std::norm(bh[i]) / (d * d);
    }
    return std::sqrt(s);
  };

  bool hard = false;
  if (bnorm == 0.0 || std::sqrt(btop2) <= 1e-10 * bnorm) {
    VectorXcd c = VectorXcd::Zero(m);
    double nperp2 = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lam[i] >= lmax - 1e-10 * spread) continue;
      c[i] = bh[i] / (lmax - lam[i]);
      nperp2 += std::norm(c[i]);
    }
    if (nperp2 < r * r) {
      hard = true;
      const double alpha = std::sqrt(r * r - nperp2);
      sol.z = U * c + alpha * U.col(m - 1);
      sol.multiplier = lmax;
    }
  }

  if (!hard) {
    double loB = lmax;
    double hiB = lmax + std::max(bnorm / r, 1e-30);
    while (norm_at(hiB) > r) hiB = lmax + 2.0 * (hiB - lmax);
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (loB + hiB);
      if (mid == loB || mid == hiB) break;
      (norm_at(mid) > r ? loB : hiB) = mid;
    }
    const double mu = hiB;  // the feasible side of the machine-tight bracket
    VectorXcd c(m);
    for (Eigen::Index i = 0; i < m; ++i) c[i] = bh[i] / (mu - lam[i]);
    // when the root gap underflows next to lambda_max the feasible iterate
    // undershoots the sphere; refill the deficit inside the top eigenspace,
    // phases aligned with b so the linear term stays maximal
    if (c.norm() < r * (1.0 - 1e-12)) {
      double nontop2 = 0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (lam[i] < lmax - 1e-10 * spread) nontop2 += std::norm(c[i]);
      const double kappa =
          std::sqrt(std::max(0.0, r * r - nontop2) / btop2);
      for (Eigen::Index i = 0; i < m; ++i)
        if (lam[i] >= lmax - 1e-10 * spread) c[i] = kappa * bh[i];
    }
    sol.z = U * c;
    sol.multiplier = mu;
  }

  sol.status = classify(sol.multiplier, hard);
  const VectorXcd Bz = B * sol.z;
  sol.kkt_residual = (Bz + problem.linear - sol.multiplier * sol.z).norm();
  sol.objective = sol.z.dot(Bz).real() + 2.0 * problem.linear.dot(sol.z).real();
  sol.radius_error = std::abs(sol.z.norm() - r) / r;

  if (certify_samples > 0) {
    CounterRng rng{CounterRng::derive(0xCE271FULL, static_cast<std::uint64_t>(m))};
    const double tol = 1e-9 * std::max(1.0, std::abs(sol.objective));
    for (int s = 0; s < certify_samples; ++s) {
      VectorXcd y(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        double a, bb;
        rng.next_gaussian_pair(a, bb);
        y[i] = cplx(a, bb);
      }
      const double ny = y.norm();
      if (ny == 0.0) continue;
      y *= r / ny;
      const double val = y.dot(B * y).real() + 2.0 * problem.linear.dot(y).real();
      if (val > sol.objective + tol)
        throw NumericalError(
            "solve_trs_dense_oracle: feasible point beats reported optimum");
    }
  }
  return sol;
}

}  // namespace dynsync
