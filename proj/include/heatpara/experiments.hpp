#pragma once

#include <complex>
#include <string>
#include <vector>

#include "heatpara/hamiltonian.hpp"

namespace heatpara {

struct StudyConfig {
  GeometryKind geometry = GeometryKind::Torus;
  int N = 32;
  int b = 4;
  int n_t = 128;
  double alpha = 0.9;
  std::vector<double> eps = {1.0 / 32};
  std::vector<std::uint64_t> seeds = {1};
  double delta = 0.5;
  double s = 0.0;  // 0 selects s automatically
  std::string out_dir = "out";
  bool zero_noise = false;
  bool calibrated = false;  // use cal as given instead of running calibrate
  Calibration cal;
  int threads = 0;

  void validate() const;
  GeometryPtr make_geometry() const;
  TimeGrid make_grid(const Geometry& geo) const;
};

// Named pass/fail assertion carried by a report.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct StudyReport {
  std::string name;
  json data;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;

  bool passed() const;
  std::string summary() const;
  const Check* find(const std::string& name) const;
};

std::string to_csv(const StudyReport& r);
json to_json(const StudyReport& r, const std::string& config_hash = "");
// Writes <dir>/<name>.json and <dir>/<name>.csv.
void write_report(const StudyReport& r, const std::string& dir, const std::string& config_hash);

// c_eps against log(1/eps) with the lattice oracle and a Monte Carlo estimate at eps[0].
StudyReport renorm_study(const StudyConfig& cfg, int mc_samples = 0);

// Counting-function slope over [lo, hi]; hi <= 0 selects 0.5 lambda_max.
StudyReport weyl_study(const StudyConfig& cfg, double lo = 50.0, double hi = 0.0);

StudyReport eigenvalue_bounds_study(const StudyConfig& cfg, int n_max = 30);

// Seeds seeds[0], seeds[0] + 1, ... ; evaluate the CDF on lambda_grid (empty: samples).
StudyReport tail_study(const StudyConfig& cfg, int n, const std::vector<double>& lambda_grid, int samples);

StudyReport resolvent_convergence_study(const StudyConfig& cfg, int n_max = 10);

StudyReport brezis_gallouet_check(const StudyConfig& cfg, const std::vector<int>& bands = {2, 4, 8}, int fields = 5);

struct NlsOptions {
  double T = 1.0;
  double dt = 5e-3;
  bool nonlinear = true;
  double cfl = 2.0 * 3.14159265358979323846;  // max dt * ||H+||
  int u0_band = 3;
  std::uint64_t u0_seed = 7;
  double u0_amplitude = 1.0;
  int record_every = 20;
};

struct NlsTrajectory {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<std::complex<double>> final_state;  // real-basis coefficients
  double shift = 0.0;                             // H+ = H + shift
};

using CVector = Eigen::VectorXcd;

// Strang splitting for i u_t = H+ u - |u|^2 u with the linear step from a dense
// eigendecomposition and the nonlinear phase step by a Krylov exponential.
class NlsSolver {
 public:
  NlsSolver(const Field& V, double shift, const NlsOptions& opt);
  NlsTrajectory evolve(const CVector& u0) const;
  double mass(const CVector& u) const { return u.norm(); }
  double energy(const CVector& u) const;
  CVector apply_Hplus(const CVector& u) const;
  CVector solve_Hplus(const CVector& u) const;
  const GeometryPtr& geometry() const { return geo_; }
  double norm_Hplus() const { return evals_.maxCoeff(); }
  double shift() const { return shift_; }

 private:
  CVector nonlinear_step(const CVector& u, double tau) const;
  GeometryPtr geo_;
  NlsOptions opt_;
  double shift_;
  Eigen::MatrixXd Q_;
  Eigen::VectorXd evals_;  // of H+
};

CVector to_complex(const Field& re, const Field& im);

StudyReport nls_study(const StudyConfig& cfg, const NlsOptions& opt = {});

// Scaling exponents of the truncated paraproduct probes (appendix-style operator norms).
StudyReport opnorm_study(const StudyConfig& cfg, const std::vector<double>& s_values);

// Self-contained invariant checks on N = 32.
StudyReport selftest(const StudyConfig& cfg);

}  // namespace heatpara
