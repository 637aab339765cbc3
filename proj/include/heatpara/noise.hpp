#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heatpara/bony.hpp"

namespace heatpara {

// iid N(0,1) coefficients on the real orthonormal basis.
struct WhiteNoise {
  std::uint64_t seed = 0;
  GeometryPtr geo;
  Eigen::VectorXd coeffs;

  Field field() const { return geo->from_real(coeffs); }
};

WhiteNoise sample_white(GeometryPtr geo, std::uint64_t seed);

// xi_eps = e^{-eps L} xi
Field regularize(const Field& xi, double eps);
// X_1 = -L^{-1} xi_eps with the regularized inverse l(L) = (1 - e^{-L}) / L
Field first_lift(const Field& xi_eps);

// Smallest admissible eps: 1 / lambda_max.
double eps_floor(const Geometry& geo);

// Weight of Pi(e_k, e_-k) at output frequency 0 divided by e_k e_-k; torus only.
double resonant_zero_weight(double lambda, const TimeGrid& grid, int b = 4);
// Closed form 1 - (p_b(lambda) e^{-lambda})^2 of the same weight.
double resonant_zero_weight_exact(double lambda, int b = 4);

// c_eps = E[Pi(X_1, xi_eps)]. Torus: constant field from multipliers at output
// frequency 0. Square: plain-product Wick function E[X_1 xi_eps](x).
Field renorm_constant_exact(GeometryPtr geo, double eps, const TimeGrid& grid, int b = 4);
// Independent lattice sum -(1/4pi^2) sum_k e^{-2 eps |k|^2} l(|k|^2) (1 - p_b^2 e^{-2|k|^2}).
double renorm_constant_lattice(int n, double eps, int b = 4);

struct MonteCarloField {
  Field mean;
  Field stderr_field;  // pointwise standard error
  double spatial_mean = 0.0;
  double spatial_mean_stderr = 0.0;
  int samples = 0;
};
// Average of Pi(X_1, xi_eps) (square: X_1 xi_eps) over seeds seed0 .. seed0 + S - 1.
MonteCarloField renorm_constant_mc(GeometryPtr geo, double eps, const TimeGrid& grid, int samples,
                                   std::uint64_t seed0 = 1, int b = 4);

struct EnhancedNoise {
  std::uint64_t seed = 0;
  double eps = 0.0;
  double alpha = 0.9;
  int b = 4;
  int n_t = 0;
  bool zero_noise = false;
  // square realizations use the plain-product Wick function and carry no X_2
  bool plain_product = false;
  Field xi;  // white noise before regularization
  Field xi_eps;
  Field X1;
  Field X2;
  Field Xi2;    // Pi(X_1, xi_eps) - c_eps
  Field c_eps;  // constant-valued on the torus
  double norm_xi = 0.0;   // ||xi_eps||_{C^{alpha-2}}
  double norm_Xi2 = 0.0;  // ||Xi2||_{C^{2 alpha-2}}
  double norm_X1 = 0.0;   // C^alpha
  double norm_X2 = 0.0;   // C^{2 alpha}
  double x = 0.0;         // ||Xi||_{X^alpha} = norm_xi + norm_Xi2

  const GeometryPtr& geometry() const { return xi_eps.geometry(); }
};

struct EnhanceOptions {
  int b = 4;
  bool zero_noise = false;
  bool subtract_c = true;
};

EnhancedNoise enhance(GeometryPtr geo, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                      const EnhanceOptions& opt = {});
// Same construction from a given white field (gauge tests, archives).
EnhancedNoise enhance_field(const Field& xi, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                            const EnhanceOptions& opt = {});
// Precomputed c_eps avoids the per-realization mode sum in ensembles.
EnhancedNoise enhance_field(const Field& xi, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                            const Field& c_eps, const EnhanceOptions& opt = {});
void measure_norms(EnhancedNoise& xi, const TimeGrid& grid);

json to_json(const EnhancedNoise& xi);

struct MomentRow {
  double h = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool stable = false;
};
struct MomentTable {
  std::vector<MomentRow> rows;
  double largest_stable_h = 0.0;
  std::vector<double> noise_norms;  // ||xi||_{C^{alpha-2}} per seed
  std::vector<double> xi2_norms;
};
// E[exp(h ||xi||^2 + h ||Xi2||)] per h with bootstrap intervals. A row is
// stable when finite and the interval ratio stays below 2.
MomentTable exp_moment_table(const std::vector<double>& noise_norms, const std::vector<double>& xi2_norms,
                             const std::vector<double>& h_grid, std::uint64_t seed);
MomentTable exp_moment_probe(GeometryPtr geo, int seeds, const std::vector<double>& h_grid, double eps,
                             const TimeGrid& grid, double alpha, std::uint64_t seed0 = 1);
json to_json(const MomentTable& t);

// Binary archive: "HPARA1", version, header, six coefficient blocks, crc32.
inline constexpr std::uint32_t kArchiveVersion = 1;
void archive_write(const EnhancedNoise& xi, const std::string& path);
EnhancedNoise archive_read(const std::string& path);
std::vector<unsigned char> archive_bytes(const EnhancedNoise& xi);
EnhancedNoise archive_parse(const std::vector<unsigned char>& bytes);

}  // namespace heatpara
