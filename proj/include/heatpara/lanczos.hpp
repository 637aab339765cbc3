#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace heatpara {

using VectorOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LanczosResult {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
  int iterations = 0;  // operator applications
  int runs = 0;
};

// Lowest m eigenpairs of a symmetric operator. Each run builds a fully
// reorthogonalized Krylov space in the complement of the locked vectors and
// locks the Ritz pairs that converged from the bottom; repeated runs recover
// multiplicities. Stops once m pairs are locked and the complement has
// nothing lower. Throws ConvergenceError after max_runs.
LanczosResult lanczos_lowest(const VectorOp& op, Eigen::Index dim, int m, double tol = 1e-10, int krylov_dim = 250,
                             int max_runs = 200, std::uint64_t seed = 1);

}  // namespace heatpara
