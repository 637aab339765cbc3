#include "heatpara/calderon.hpp"

#include <algorithm>
#include <cmath>

namespace heatpara {

double taylor_truncated(int b, double tau) {
  double term = 1.0, s = 0.0;
  for (int j = 0; j < b; ++j) {
    s += term;
    term *= tau / (j + 1);
  }
  return s;
}

double propagator_multiplier(double t, double lambda, int b) {
  const double tau = t * lambda;
  return std::exp(-tau) * taylor_truncated(b, tau);
}

double localizer_multiplier(double t, double lambda, int b) {
  const double tau = t * lambda;
  return std::pow(tau, b) * std::exp(-tau) / std::tgamma(static_cast<double>(b));
}

double inverse_L_multiplier(double lambda) {
  if (lambda == 0.0) return 1.0;
  return -std::expm1(-lambda) / lambda;
}

Field propagator(const Field& f, double t, int b) {
  if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("t must lie in (0, 1]");
  if (b < 1) throw InvalidArgument("b must be at least 1");
  return apply_multiplier(f, [t, b](double l) { return propagator_multiplier(t, l, b); });
}

Field localizer(const Field& f, double t, int b) {
  if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("t must lie in (0, 1]");
  if (b < 1) throw InvalidArgument("b must be at least 1");
  return apply_multiplier(f, [t, b](double l) { return localizer_multiplier(t, l, b); });
}

Field inverse_L(const Field& f) { return apply_multiplier(f, inverse_L_multiplier); }

Field heat(const Field& f, double t) {
  return apply_multiplier(f, [t](double l) { return std::exp(-t * l); });
}

double localizer_floor_constant(int b, double threshold) {
  // solve c^b e^{-c} / (b-1)! = threshold for the small root
  const double fact = std::tgamma(static_cast<double>(b));
  double c = std::pow(threshold * fact, 1.0 / b);
  for (int it = 0; it < 50; ++it) c = std::pow(threshold * fact * std::exp(c), 1.0 / b);
  return c;
}

TimeGrid TimeGrid::make(const Geometry& geo, int n_t, int b) {
  return make(localizer_floor_constant(b) / geo.lambda_max(), n_t);
}

TimeGrid TimeGrid::make(double t_min, int n_t) {
  if (n_t < 2) throw InvalidArgument("time grid needs at least two points");
  if (!(t_min > 0.0 && t_min < 1.0)) throw InvalidArgument("t_min must lie in (0, 1)");
  TimeGrid g;
  g.t_min = t_min;
  g.t_max = 1.0;
  const double span = -std::log(t_min);
  const double h = span / (n_t - 1);
  g.t.resize(n_t);
  g.w.assign(n_t, h);
  for (int j = 0; j < n_t; ++j) g.t[j] = std::exp(std::log(t_min) + j * h);
  g.t[n_t - 1] = 1.0;
  g.w.front() = 0.5 * h;
  g.w.back() = 0.5 * h;
  return g;
}

double TimeGrid::log_span() const { return std::log(t_max / t_min); }

std::vector<double> TimeGrid::truncated_weights(double s, bool upper) const {
  std::vector<double> lw(t.size(), 0.0);
  if (s >= t_max) {
    lw = w;
  } else {
    const double h = log_span() / static_cast<double>(t.size() - 1);
    std::size_t last = 0;
    while (last + 1 < t.size() && t[last + 1] <= s * (1.0 + 1e-12)) ++last;
    if (last > 0) {
      for (std::size_t j = 0; j <= last; ++j) lw[j] = h;
      lw[0] = 0.5 * h;
      lw[last] = 0.5 * h;
    }
  }
  if (!upper) return lw;
  std::vector<double> uw(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) uw[j] = w[j] - lw[j];
  return uw;
}

Field calderon_reconstruct(const Field& f, const TimeGrid& grid, int b) {
  const Geometry& geo = f.geo();
  Field out = propagator(f, 1.0, b);
  auto& c = out.coeffs();
  for (std::size_t idx : geo.active_indices()) {
    const double l = geo.lambda(idx);
    double m = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) m += grid.w[j] * localizer_multiplier(grid.t[j], l, b);
    c[idx] += m * f.coeffs()[idx];
  }
  return out;
}

double calderon_error(const Field& f, const TimeGrid& grid, int b) {
  return (calderon_reconstruct(f, grid, b) - f).norm() / f.norm();
}

int family_order(BesovFamily fam, int b) { return fam == BesovFamily::Localizer ? 2 * b : 1; }

double lp_norm(const Field& f, LpIndex p) {
  if (p == LpIndex::Two) return f.norm();
  const auto v = f.complex_values();
  double m = 0.0;
  for (const cplx& z : v) m = std::max(m, std::abs(z));
  return m;
}

namespace {

// Norms of family members at scale t; the gradient family has two members.
void family_norms(const Field& f, BesovFamily fam, double t, int b, LpIndex p, std::vector<double>& out) {
  out.clear();
  switch (fam) {
    case BesovFamily::Localizer:
      out.push_back(lp_norm(localizer(f, t, b), p));
      return;
    case BesovFamily::HalfLaplacian:
      out.push_back(lp_norm(
          apply_multiplier(f, [t, b](double l) { return std::sqrt(t * l) * propagator_multiplier(t, l, b); }), p));
      return;
    case BesovFamily::Gradient: {
      Field pf = propagator(f, t, b);
      for (int ax = 0; ax < 2; ++ax) out.push_back(std::sqrt(t) * lp_norm(derivative(pf, ax), p));
      return;
    }
  }
}

}  // namespace

BesovResult besov_norm(const Field& f, const BesovParams& params, const TimeGrid& grid) {
  if (!(std::abs(params.alpha) < 2.0 * params.b)) throw InvalidArgument("|alpha| must be below 2b");
  BesovResult r;
  r.families = params.families;
  if (r.families.empty()) {
    for (BesovFamily fam : {BesovFamily::Localizer, BesovFamily::HalfLaplacian, BesovFamily::Gradient})
      if (family_order(fam, params.b) > std::abs(params.alpha)) r.families.push_back(fam);
  }
  r.low_part = lp_norm(heat(f, 1.0), params.p);
  std::vector<double> members;
  double best = 0.0;
  for (BesovFamily fam : r.families) {
    std::vector<double> prof(grid.size(), 0.0);
    std::vector<std::vector<double>> per_member;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      family_norms(f, fam, grid.t[j], params.b, params.p, members);
      if (per_member.empty()) per_member.assign(members.size(), std::vector<double>(grid.size()));
      const double scale = std::pow(grid.t[j], -0.5 * params.alpha);
      for (std::size_t m = 0; m < members.size(); ++m) per_member[m][j] = scale * members[m];
    }
    double fam_val = 0.0;
    for (const auto& pm : per_member) {
      double v = 0.0;
      if (params.q == LpIndex::Infinity) {
        for (double x : pm) v = std::max(v, x);
      } else {
        for (std::size_t j = 0; j < grid.size(); ++j) v += grid.w[j] * pm[j] * pm[j];
        v = std::sqrt(v);
      }
      fam_val = std::max(fam_val, v);
      for (std::size_t j = 0; j < grid.size(); ++j) prof[j] = std::max(prof[j], pm[j]);
    }
    r.family_values.push_back(fam_val);
    r.profile.push_back(std::move(prof));
    best = std::max(best, fam_val);
  }
  r.value = r.low_part + best;
  return r;
}

double holder_norm(const Field& f, double alpha, const TimeGrid& grid, int b) {
  BesovParams p;
  p.alpha = alpha;
  p.p = LpIndex::Infinity;
  p.q = LpIndex::Infinity;
  p.b = b;
  return besov_norm(f, p, grid).value;
}

double sobolev_norm(const Field& f, double alpha, const TimeGrid& grid, int b) {
  BesovParams p;
  p.alpha = alpha;
  p.p = LpIndex::Two;
  p.q = LpIndex::Two;
  p.b = b;
  return besov_norm(f, p, grid).value;
}

ScalingReport composition_decay_probe(int a, int a_prime, const std::vector<std::pair<double, double>>& pairs) {
  if (a < 1 || a_prime < 1) throw InvalidArgument("cancellation orders must be positive");
  std::vector<double> x, y;
  for (const auto& [s, t] : pairs) {
    // sup over lambda on a dense logarithmic grid around the scale 1/(s+t)
    const double centre = 1.0 / (s + t);
    double best = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double l = centre * std::pow(10.0, -4.0 + 8.0 * i / 4000.0);
      const double v = std::pow(s * l, 0.5 * a) * std::exp(-s * l) * std::pow(t * l, 0.5 * a_prime) * std::exp(-t * l);
      best = std::max(best, v);
    }
    x.push_back(t * s / ((t + s) * (t + s)));
    y.push_back(best);
  }
  const std::string id = "composition_Q" + std::to_string(a) + "_Q" + std::to_string(a_prime);
  std::vector<double> sx = x;
  std::sort(sx.begin(), sx.end());
  if (std::adjacent_find(sx.begin(), sx.end()) != sx.end()) {
    // repeated ratios carry no decay information; report the raw norms
    ScalingReport r;
    r.op_id = id;
    r.source_space = r.target_space = "L2";
    r.scales = x;
    r.norms = y;
    return r;
  }
  return fit_scaling(id, "L2", "L2", x, y);
}

double appendix_a_integral(double r, double alpha) {
  // u = e^v; integrand (e^v / (1 + e^{2v}))^r e^{alpha v}
  const double lo = -80.0, hi = 80.0;
  const int n = 64000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double v = lo + i * h;
    const double base = v > 0 ? std::exp(-v) / (1.0 + std::exp(-2.0 * v)) : std::exp(v) / (1.0 + std::exp(2.0 * v));
    const double val = std::pow(base, r) * std::exp(alpha * v);
    s += (i == 0 || i == n ? 0.5 : 1.0) * val;
  }
  return s * h;
}

}  // namespace heatpara
