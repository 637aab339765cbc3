#include "heatpara/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "heatpara/errors.hpp"
#include "heatpara/rng.hpp"

namespace heatpara {

namespace {

void orthogonalize(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) w -= b.dot(w) * b;
}

struct Run {
  std::vector<double> theta;
  std::vector<double> resid;
  std::vector<Eigen::VectorXd> ritz;
};

}  // namespace

LanczosResult lanczos_lowest(const VectorOp& op, Eigen::Index dim, int m, double tol, int krylov_dim, int max_runs,
                             std::uint64_t seed) {
  if (m < 1 || m > dim) throw InvalidArgument("requested eigenpair count out of range");
  LanczosResult res;
  std::vector<Eigen::VectorXd> locked;
  std::vector<double> locked_vals;
  auto gen = make_stream(seed, Stream::Lanczos);
  std::normal_distribution<double> nd;
  Eigen::VectorXd start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start[i] = nd(gen);

  for (int run = 0; run < max_runs; ++run) {
    res.runs = run + 1;
    Eigen::VectorXd v = start;
    orthogonalize(v, locked);
    if (v.norm() < 1e-12) {
      for (Eigen::Index i = 0; i < dim; ++i) v[i] = nd(gen);
      orthogonalize(v, locked);
    }
    v /= v.norm();
    const int kmax = static_cast<int>(std::min<Eigen::Index>(krylov_dim, dim - static_cast<Eigen::Index>(locked.size())));
    std::vector<Eigen::VectorXd> V{v};
    std::vector<double> a, b;
    Run out;
    for (int j = 0; j < kmax; ++j) {
      Eigen::VectorXd w = op(V[j]);
      ++res.iterations;
      a.push_back(V[j].dot(w));
      w -= a[j] * V[j];
      if (j > 0) w -= b[j - 1] * V[j - 1];
      orthogonalize(w, locked);
      orthogonalize(w, V);
      const double beta = w.norm();
      const bool last = j + 1 == kmax || beta < 1e-13 * (1.0 + std::abs(a[j]));
      if ((j + 1) % 10 == 0 || last) {
        const int k = j + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
          T(i, i) = a[i];
          if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = b[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        out.theta.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
        out.resid.resize(k);
        for (int i = 0; i < k; ++i) out.resid[i] = std::abs(beta * es.eigenvectors()(k - 1, i));
        if (out.resid[0] < tol * (1.0 + std::abs(out.theta[0])) || last) {
          out.ritz.clear();
          for (int i = 0; i < k; ++i) {
            if (i > 0 && out.resid[i] >= tol * (1.0 + std::abs(out.theta[i]))) break;
            Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
            for (int r = 0; r < k; ++r) y += es.eigenvectors()(r, i) * V[r];
            out.ritz.push_back(y);
          }
          break;
        }
      }
      b.push_back(beta);
      V.push_back(w / beta);
    }
    const bool first_ok = out.resid[0] < tol * (1.0 + std::abs(out.theta[0]));
    if (static_cast<int>(locked.size()) >= m && first_ok) {
      std::vector<double> sorted = locked_vals;
      std::sort(sorted.begin(), sorted.end());
      if (out.theta[0] >= sorted[m - 1] - tol * (1.0 + std::abs(sorted[m - 1]))) break;
    }
    if (!first_ok) {
      start = out.ritz[0];  // restart from the best approximation
      if (run + 1 == max_runs) throw ConvergenceError("Lanczos did not converge within the run limit");
      continue;
    }
    for (std::size_t i = 0; i < out.ritz.size(); ++i) {
      Eigen::VectorXd y = out.ritz[i];
      orthogonalize(y, locked);
      y /= y.norm();
      locked.push_back(y);
      locked_vals.push_back(out.theta[i]);
    }
    for (Eigen::Index i = 0; i < dim; ++i) start[i] = nd(gen);
    if (run + 1 == max_runs) throw ConvergenceError("Lanczos did not converge within the run limit");
  }

  // Rayleigh-Ritz on the locked space
  const Eigen::Index p = static_cast<Eigen::Index>(locked.size());
  Eigen::MatrixXd Y(dim, p), AY(dim, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    Y.col(i) = locked[i];
    AY.col(i) = op(locked[i]);
  }
  Eigen::MatrixXd B = Y.transpose() * AY;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  for (int i = 0; i < m; ++i) {
    res.values.push_back(es.eigenvalues()[i]);
    Eigen::VectorXd y = Y * es.eigenvectors().col(i);
    res.vectors.push_back(y / y.norm());
  }
  return res;
}

}  // namespace heatpara
