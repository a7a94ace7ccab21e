#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "dynsync/signal.hpp"

namespace dynsync {

// max over ||z||_2 = r of  z^H B z + 2 Re(b^H z),  B Hermitian, indefinite
// allowed. Solutions satisfy B z + b = mu z with mu >= lambda_max(B); that
// stationarity certificate makes any such point a global maximizer.
struct TrsProblem {
  Eigen::Index dim = 0;
  std::function<void(const VectorXcd&, VectorXcd&)> apply;  // y = B x
  std::optional<MatrixXcd> dense;                           // explicit B, optional
  VectorXcd linear;                                         // b
  double radius = 1.0;
  // optional: for a given shift mu, the action of an SPD approximation of
  // (mu I - B)^{-1}, used to precondition the inner CG solves
  std::function<std::function<void(const VectorXcd&, VectorXcd&)>(double)>
      shifted_precond;

  static TrsProblem from_dense(MatrixXcd B, VectorXcd b, double radius);
};

enum class TrsStatus {
  boundary,       // secular root mu* > lambda_max, mu* >= 0
  interior_free,  // mu* < 0: the ball-constrained maximizer would be interior
  hard_case,      // b (numerically) orthogonal to the top eigenspace;
                  // solution includes a top-eigenvector correction
  failed,         // iteration budget exhausted; best iterate returned
};

const char* to_string(TrsStatus s);

struct TrsOptions {
  double tol = 1e-8;          // relative radius residual at exit
  int max_newton = 50;        // outer secular iterations
  int max_cg = 500;           // inner CG iterations per shifted solve
  double cg_rtol = 1e-12;
  int lanczos_dim = 120;      // Krylov dimension per restart
  int lanczos_restarts = 12;
  double lanczos_rtol = 1e-8;
  double hard_case_rtol = 1e-10;  // |u^H b| <= this * ||b|| triggers hard case
  std::uint64_t start_seed = 0x5eed;  // deterministic Lanczos start vector
};

struct TrsSolution {
  VectorXcd z;
  double multiplier = 0.0;
  double objective = 0.0;
  TrsStatus status = TrsStatus::failed;
  double radius_error = 0.0;        // | ||z|| - r | / r
  double kkt_residual = 0.0;        // || B z + b - mu z ||
  double lambda_max = 0.0;          // top-eigenvalue estimate
  double lambda_max_residual = 0.0; // || B u - lambda_max u || for its Ritz vector
  int newton_iters = 0;
  long matvecs = 0;
};

// Lanczos top eigenpair + safeguarded secular iteration on the shifted
// solves; all operator access through matrix-vector products.
TrsSolution solve_trs(const TrsProblem& problem, const TrsOptions& opts = {});

// Reference solver: dense eigendecomposition, exact hard-case handling,
// high-precision bisection for the multiplier. Dimension capped at 200.
// certify_samples > 0 additionally checks the objective against that many
// seeded random feasible points and throws NumericalError on a violation.
TrsSolution solve_trs_dense_oracle(const TrsProblem& problem,
                                   int certify_samples = 0);

double trs_objective(const TrsProblem& problem, const VectorXcd& z);

}  // namespace dynsync
