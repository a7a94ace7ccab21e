#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dynsync/signal.hpp"

namespace dynsync {

// Hyperparameter grid over the smoothing strength beta:
// integers 0..floor(sqrt(T)), then 5 equispaced points on
// [floor(sqrt(T)), floor(T^(2/3))] and 5 on [floor(T^(2/3)), T],
// endpoints included, duplicates dropped, ascending.
struct BetaGrid {
  std::vector<double> betas;
};

BetaGrid build_beta_grid(int T);

// smoothing order for a grid point: min(floor(beta) + 1, T)
int tau_for_beta(double beta, int T);

// sum over blocks of g~^H A~ g~ + 2 Re(b^H g~) on the anchored coordinates;
// the quadratic part must be real up to 1e-10 relative (Hermitian data)
double data_fidelity(const MeasurementStack& A, const StackedSignal& g);

// index of the largest value; ties resolved to the smallest beta
int select_beta_argmax(const std::vector<double>& fidelity);

// index of the interior grid point with the largest absolute change of the
// forward difference quotient; ties resolved to the smallest beta.
// Needs at least 3 grid points.
int select_beta_slope_change(const BetaGrid& grid, const std::vector<double>& fidelity);

// rows "beta,fidelity,rmse"; rmse column written as nan when unknown
void write_fidelity_csv(std::ostream& os, const BetaGrid& grid,
                        const std::vector<double>& fidelity,
                        const std::vector<double>& rmse);
void write_fidelity_csv(const std::string& path, const BetaGrid& grid,
                        const std::vector<double>& fidelity,
                        const std::vector<double>& rmse);

}  // namespace dynsync
