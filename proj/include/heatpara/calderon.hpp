#pragma once

#include <vector>

#include "heatpara/geometry.hpp"
#include "heatpara/report.hpp"

namespace heatpara {

// Scalar multipliers, tau = t * lambda.
double taylor_truncated(int b, double tau);  // sum_{j<b} tau^j / j!
double propagator_multiplier(double t, double lambda, int b);
double localizer_multiplier(double t, double lambda, int b);
double inverse_L_multiplier(double lambda);

Field propagator(const Field& f, double t, int b);
Field localizer(const Field& f, double t, int b);
Field inverse_L(const Field& f);
Field heat(const Field& f, double t);

// Geometric grid on [t_min, 1] with log-trapezoid weights for dt/t.
struct TimeGrid {
  double t_min = 0.0;
  double t_max = 1.0;
  std::vector<double> t;
  std::vector<double> w;

  // t_min is placed where every localizer multiplier on the geometry's table
  // drops below 1e-14 for all smaller t.
  static TimeGrid make(const Geometry& geo, int n_t, int b = 4);
  static TimeGrid make(double t_min, int n_t);
  std::size_t size() const { return t.size(); }
  double log_span() const;
  // Trapezoid weights for the subgrid t <= s (s = 1 reproduces w), or t > s if upper.
  std::vector<double> truncated_weights(double s, bool upper = false) const;
};

double localizer_floor_constant(int b, double threshold = 1e-14);

Field calderon_reconstruct(const Field& f, const TimeGrid& grid, int b);
double calderon_error(const Field& f, const TimeGrid& grid, int b);

enum class LpIndex { Two, Infinity };

enum class BesovFamily { Localizer, HalfLaplacian, Gradient };

struct BesovParams {
  double alpha = 0.0;
  LpIndex p = LpIndex::Infinity;
  LpIndex q = LpIndex::Infinity;
  int b = 4;
  // Empty selects every family whose cancellation order exceeds |alpha|.
  std::vector<BesovFamily> families;
};

int family_order(BesovFamily fam, int b);

struct BesovResult {
  double value = 0.0;
  double low_part = 0.0;
  std::vector<BesovFamily> families;
  std::vector<double> family_values;
  // profile[f][j] = t_j^{-alpha/2} || Q_{t_j} f ||_p for family f
  std::vector<std::vector<double>> profile;
};

BesovResult besov_norm(const Field& f, const BesovParams& params, const TimeGrid& grid);
double holder_norm(const Field& f, double alpha, const TimeGrid& grid, int b = 4);
double sobolev_norm(const Field& f, double alpha, const TimeGrid& grid, int b = 4);
double lp_norm(const Field& f, LpIndex p);

// Sup over lambda of |Q^a_s Q^{a'}_t| for Q^a_t = (tL)^{a/2} e^{-tL}, fitted
// against ts/(t+s)^2 over the given (s, t) pairs.
ScalingReport composition_decay_probe(int a, int a_prime, const std::vector<std::pair<double, double>>& pairs);

// Numeric value of the integral of (u/(1+u^2))^r u^alpha du/u over (0, inf).
double appendix_a_integral(double r, double alpha);

}  // namespace heatpara
