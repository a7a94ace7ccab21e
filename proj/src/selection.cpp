#include "dynsync/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "dynsync/errors.hpp"

namespace dynsync {

BetaGrid build_beta_grid(int T) {
  if (T < 1) throw ValidationError("build_beta_grid: need T >= 1");
  std::vector<double> pts;
  const double head = std::floor(std::sqrt(double(T)));
  for (double b = 0; b <= head; b += 1.0) pts.push_back(b);
  const double knee = std::floor(std::cbrt(double(T) * T));
  auto lin5 = [&](double a, double b) {
    for (int i = 0; i < 5; ++i) pts.push_back(a + (b - a) * double(i) / 4.0);
  };
  lin5(head, knee);
  lin5(knee, double(T));
  std::sort(pts.begin(), pts.end());
  BetaGrid grid;
  for (double b : pts) {
    if (!grid.betas.empty() && b - grid.betas.back() <= 1e-12 * std::max(1.0, b))
      continue;
    grid.betas.push_back(b);
  }
  return grid;
}

int tau_for_beta(double beta, int T) {
  if (!(beta >= 0)) throw ValidationError("tau_for_beta: beta < 0");
  return std::min(static_cast<int>(std::floor(beta)) + 1, T);
}

double data_fidelity(const MeasurementStack& A, const StackedSignal& g) {
  if (A.n() != g.n() || A.T() != g.T())
    throw ValidationError("data_fidelity: shape mismatch");
  double total = 0;
  MatrixXcd Atil;
  VectorXcd b;
  for (int k = 0; k < A.T(); ++k) {
    A.anchored_split(k, Atil, b);
    const VectorXcd gt = g.block(k).values().tail(A.n() - 1);
    const cplx quad = gt.dot(Atil * gt);
    if (std::abs(quad.imag()) > 1e-10 * (std::abs(quad.real()) + 1.0))
      throw NumericalError("data_fidelity: quadratic form not real");
    total += quad.real() + 2.0 * b.dot(gt).real();
  }
  return total;
}

int select_beta_argmax(const std::vector<double>& fidelity) {
  if (fidelity.empty()) throw ValidationError("select_beta_argmax: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(fidelity.size()); ++i)
    if (fidelity[i] > fidelity[best]) best = i;
  return best;
}

int select_beta_slope_change(const BetaGrid& grid,
                             const std::vector<double>& fidelity) {
  const int m = static_cast<int>(grid.betas.size());
  if (m < 3) throw ValidationError("select_beta_slope_change: need >= 3 grid points");
  if (fidelity.size() != grid.betas.size())
    throw ValidationError("select_beta_slope_change: size mismatch");
  std::vector<double> slope(m - 1);
  for (int i = 0; i + 1 < m; ++i)
    slope[i] = (fidelity[i + 1] - fidelity[i]) / (grid.betas[i + 1] - grid.betas[i]);
  int best = 1;
  double best_change = -1;
  for (int i = 1; i + 1 < m; ++i) {
    const double change = std::abs(slope[i] - slope[i - 1]);
    if (change > best_change) {
      best_change = change;
      best = i;
    }
  }
  return best;
}

void write_fidelity_csv(std::ostream& os, const BetaGrid& grid,
                        const std::vector<double>& fidelity,
                        const std::vector<double>& rmse) {
  if (fidelity.size() != grid.betas.size())
    throw ValidationError("write_fidelity_csv: size mismatch");
  char buf[128];
  os << "beta,fidelity,rmse\n";
  for (std::size_t i = 0; i < grid.betas.size(); ++i) {
    const double r = i < rmse.size() ? rmse[i] : std::nan("");
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.betas[i],
                  fidelity[i], r);
    os << buf;
  }
}

void write_fidelity_csv(const std::string& path, const BetaGrid& grid,
                        const std::vector<double>& fidelity,
                        const std::vector<double>& rmse) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  write_fidelity_csv(f, grid, fidelity, rmse);
}

}  // namespace dynsync
