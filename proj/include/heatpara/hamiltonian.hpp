#pragma once

#include <optional>
#include <string>
#include <vector>

#include "heatpara/correctors.hpp"
#include "heatpara/noise.hpp"

namespace heatpara {

// Potential of the grid operator: xi_eps - c_eps, or xi_eps alone.
Field potential(const EnhancedNoise& xi, bool subtract_c = true);

// H_eps u = L u + xi_eps u - c_eps u, matrix-free.
Field apply_H_eps(const EnhancedNoise& xi, const Field& u, bool subtract_c = true);
Field apply_schrodinger(const Field& V, const Field& u);

// Symmetric real-basis matrix of L + V.
Eigen::MatrixXd dense_operator(const Field& V);

enum class EigenMethod { Dense, Lanczos };
std::string to_string(EigenMethod m);

struct Calibration {
  double k = 1.0;
  double m = 1.0;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  std::vector<Field> eigenvectors;
  EigenMethod method = EigenMethod::Dense;
  double shift = 0.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
};

struct SpectrumOptions {
  EigenMethod method = EigenMethod::Dense;
  bool subtract_c = true;
  bool vectors = false;
  double shift = 0.0;  // k_Xi, reported and used by Lanczos
  double tol = 1e-10;
  int max_restarts = 200;
  int krylov_dim = 160;
  std::uint64_t seed = 1;
};

inline constexpr int kDenseLimit = 48;

SpectrumResult spectrum(const Field& V, int m, const SpectrumOptions& opt = {});
SpectrumResult spectrum(const EnhancedNoise& xi, int m, const SpectrumOptions& opt = {});
json to_json(const SpectrumResult& r, const Geometry& geo, const Calibration& cal);

// u it -> u - P~^s_u X1 - P~^s_u X2 and its inverse Gamma by fixed point.
struct DomainMap {
  const EnhancedNoise* xi = nullptr;
  TimeGrid grid;
  double s = 0.5;
  double fp_tol = 1e-10;
  int max_iter = 200;
  double q = 0.0;  // last measured contraction factor

  Field X() const { return xi->X1 + xi->X2; }
};

DomainMap make_domain_map(const EnhancedNoise& xi, const TimeGrid& grid, double s, double fp_tol = 1e-10,
                          int max_iter = 200);
Field phi_s(const DomainMap& dm, const Field& u);

struct GammaResult {
  Field u;
  int iterations = 0;
  double q = 0.0;
  std::vector<double> increments;  // ||u_{n+1} - u_n||_2
};
// Throws NonContraction when successive increments stop shrinking.
GammaResult gamma(DomainMap& dm, const Field& u_sharp);

// Representation H u = L u#_s + P_xi u#_s + Pi(u#_s, xi) + Psi^s(u) evaluated term by term.
Field apply_H_paracontrolled(const EnhancedNoise& xi, const DomainMap& dm, const Field& u);
// Remainder R(u) of the s = 1 representation.
Field paracontrolled_remainder(const EnhancedNoise& xi, const TimeGrid& grid, const Field& u);

// Closed-form constants of the paper's bounds with measured x.
struct BoundConstants {
  double delta = 0.5;
  double s = 0.5;
  double alpha = 0.9;
  double beta = 0.0;  // (2/3 + alpha) / 2
  double x = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m_plus = 1.0;
  double m_minus = 1.0;
  double k_xi = 1.0;
  Calibration cal;
  double s0 = 0.0;  // s_0(Xi); infinite at x = 0
};
BoundConstants bound_constants(double x, double alpha, double delta, double s, const Calibration& cal);
json to_json(const BoundConstants& b);

// lambda_n - C <= lambda_n(Xi) <= (1 + delta) lambda_n + C' with s chosen so
// that m^- = 1 (lower) and m^+ = 1 + delta (upper). When that s exceeds 1/2 it is
// capped and C absorbs (1 - m^-) lambda_max for the eigenvalues up to lambda_max.
struct EigenvalueBounds {
  double delta = 0.5;
  double lower_C = 0.0;
  double upper_C = 0.0;
  double lambda_max = 0.0;
  BoundConstants lower;
  BoundConstants upper;
};
EigenvalueBounds eigenvalue_bounds(double x, double alpha, double delta, const Calibration& cal,
                                   double lambda_max = 0.0);

// One global inequality scan: m from the truncated paraproduct bound and k
// from the H^2 and H^1 inequalities over random domain elements and low
// eigenfunctions of calibration realizations.
struct CalibrationReport {
  Calibration cal;
  double m_raw = 0.0;
  double k_h2 = 0.0;
  double k_h1 = 0.0;
  double safety = 1.0;
  int samples = 0;
};
CalibrationReport calibrate(GeometryPtr geo, const TimeGrid& grid, double eps, double alpha, double delta,
                            int realizations = 2, int fields = 25, std::uint64_t seed = 1,
                            double safety = 2.0);
json to_json(const CalibrationReport& c);

}  // namespace heatpara
