#include "heatpara/noise.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "heatpara/parallel.hpp"
#include "heatpara/rng.hpp"
#include "heatpara/stats.hpp"

namespace heatpara {

namespace {

constexpr double kPi = std::numbers::pi;

Field zero_like(const GeometryPtr& geo) { return Field(geo); }

}  // namespace

WhiteNoise sample_white(GeometryPtr geo, std::uint64_t seed) {
  WhiteNoise w;
  w.seed = seed;
  w.coeffs.resize(static_cast<Eigen::Index>(geo->real_dim()));
  auto gen = make_stream(seed, Stream::WhiteNoise);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < w.coeffs.size(); ++i) w.coeffs[i] = nd(gen);
  w.geo = std::move(geo);
  return w;
}

Field regularize(const Field& xi, double eps) { return heat(xi, eps); }

Field first_lift(const Field& xi_eps) { return -1.0 * inverse_L(xi_eps); }

double eps_floor(const Geometry& geo) { return 1.0 / geo.lambda_max(); }

double resonant_zero_weight(double lambda, const TimeGrid& grid, int b) {
  const auto& d = decomposition(b);
  const double r = std::sqrt(lambda);
  const std::array<double, 2> k{r, 0.0}, l{-r, 0.0};
  double acc = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double s = 0.0;
    for (const auto& term : d.resonant) s += term_multiplier(term, d.scale, grid.t[j], k, l);
    acc += grid.w[j] * s;
  }
  return acc;
}

double resonant_zero_weight_exact(double lambda, int b) {
  const double p = propagator_multiplier(1.0, lambda, b);
  return 1.0 - p * p;
}

Field renorm_constant_exact(GeometryPtr geo, double eps, const TimeGrid& grid, int b) {
  if (!(eps >= eps_floor(*geo))) throw InvalidArgument("eps below the grid floor 1/lambda_max");
  if (geo->is_torus()) {
    std::map<double, double> weight;
    double c = 0.0;
    for (std::size_t idx : geo->active_indices()) {
      const double lam = geo->lambda(idx);
      if (lam == 0.0) continue;  // Pi(1, 1) = 0
      auto it = weight.find(lam);
      if (it == weight.end()) it = weight.emplace(lam, resonant_zero_weight(lam, grid, b)).first;
      c += std::exp(-2.0 * eps * lam) * inverse_L_multiplier(lam) * it->second;
    }
    return Field::constant(geo, -c / (4.0 * kPi * kPi));
  }
  // sum_n w_n e_n(x)^2 with e_n = (2/pi) sin(n x) sin(m y)
  const int n = geo->n();
  Eigen::MatrixXd W(n, n), S(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const double lam = static_cast<double>((p + 1) * (p + 1) + (q + 1) * (q + 1));
      W(p, q) = std::exp(-2.0 * eps * lam) * inverse_L_multiplier(lam);
      const double s = std::sin((p + 1) * geo->grid_point(q));
      S(p, q) = s * s;  // S(mode, point)
    }
  const Eigen::MatrixXd vals = (4.0 / (kPi * kPi)) * S.transpose() * W * S;
  std::vector<double> v(geo->size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(i) * n + j] = -vals(i, j);
  return Field::from_values(geo, v);
}

double renorm_constant_lattice(int n, double eps, int b) {
  const int h = n / 2;
  double c = 0.0;
  for (int k0 = -h + 1; k0 < h; ++k0)
    for (int k1 = -h + 1; k1 < h; ++k1) {
      if (k0 == 0 && k1 == 0) continue;
      const double lam = static_cast<double>(k0 * k0 + k1 * k1);
      const double p = std::exp(-lam);
      double taylor = 0.0, term = 1.0;
      for (int j = 0; j < b; ++j) {
        taylor += term;
        term *= lam / (j + 1);
      }
      c += std::exp(-2.0 * eps * lam) * (1.0 - p) / lam * (1.0 - taylor * taylor * p * p);
    }
  return -c / (4.0 * kPi * kPi);
}

MonteCarloField renorm_constant_mc(GeometryPtr geo, double eps, const TimeGrid& grid, int samples, std::uint64_t seed0,
                                   int b) {
  if (samples < 2) throw InvalidArgument("Monte Carlo estimate needs S >= 2");
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(samples));
  parallel_for(vals.size(), [&](std::size_t i) {
    const Field xe = regularize(sample_white(geo, seed0 + i).field(), eps);
    const Field x1 = first_lift(xe);
    const Field pi = geo->is_torus() ? resonant(x1, xe, grid, b) : multiply(x1, xe);
    vals[i] = pi.values();
  });
  const std::size_t np = vals[0].size();
  std::vector<double> m(np, 0.0), se(np, 0.0), means;
  for (const auto& v : vals) {
    for (std::size_t p = 0; p < np; ++p) m[p] += v[p];
    double a = 0.0;
    for (double x : v) a += x;
    means.push_back(a / static_cast<double>(np));
  }
  for (auto& x : m) x /= samples;
  for (const auto& v : vals)
    for (std::size_t p = 0; p < np; ++p) se[p] += (v[p] - m[p]) * (v[p] - m[p]);
  for (auto& x : se) x = std::sqrt(x / (samples - 1) / samples);
  MonteCarloField r;
  r.mean = Field::from_values(geo, m);
  r.stderr_field = Field::from_values(geo, se);
  r.spatial_mean = mean(means);
  r.spatial_mean_stderr = sample_stddev(means) / std::sqrt(static_cast<double>(samples));
  r.samples = samples;
  return r;
}

EnhancedNoise enhance(GeometryPtr geo, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                      const EnhanceOptions& opt) {
  const Field xi = opt.zero_noise ? zero_like(geo) : sample_white(geo, seed).field();
  return enhance_field(xi, seed, eps, grid, alpha, opt);
}

EnhancedNoise enhance_field(const Field& xi, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                            const EnhanceOptions& opt) {
  const GeometryPtr& geo = xi.geometry();
  const Field c = opt.zero_noise ? zero_like(geo) : renorm_constant_exact(geo, eps, grid, opt.b);
  return enhance_field(xi, seed, eps, grid, alpha, c, opt);
}

EnhancedNoise enhance_field(const Field& xi, std::uint64_t seed, double eps, const TimeGrid& grid, double alpha,
                            const Field& c_eps, const EnhanceOptions& opt) {
  if (!(alpha > 2.0 / 3.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (2/3, 1)");
  const GeometryPtr& geo = xi.geometry();
  if (!(eps >= eps_floor(*geo))) throw InvalidArgument("eps below the grid floor 1/lambda_max");
  require_same_geometry(xi, c_eps);
  EnhancedNoise e;
  e.seed = seed;
  e.eps = eps;
  e.alpha = alpha;
  e.b = opt.b;
  e.n_t = static_cast<int>(grid.size());
  e.zero_noise = opt.zero_noise;
  e.plain_product = !geo->is_torus();
  e.xi = opt.zero_noise ? zero_like(geo) : xi;
  e.xi_eps = regularize(e.xi, eps);
  e.X1 = first_lift(e.xi_eps);
  e.c_eps = opt.zero_noise ? zero_like(geo) : c_eps;
  if (geo->is_torus()) {
    e.Xi2 = resonant(e.X1, e.xi_eps, grid, opt.b);
    if (opt.subtract_c) e.Xi2 -= e.c_eps;
    e.X2 = -1.0 * inverse_L(e.Xi2 + para(e.xi_eps, e.X1, grid, opt.b));
  } else {
    e.Xi2 = multiply(e.X1, e.xi_eps);
    if (opt.subtract_c) e.Xi2 -= e.c_eps;
    e.X2 = zero_like(geo);
  }
  measure_norms(e, grid);
  return e;
}

void measure_norms(EnhancedNoise& e, const TimeGrid& grid) {
  e.norm_xi = holder_norm(e.xi_eps, e.alpha - 2.0, grid, e.b);
  e.norm_Xi2 = holder_norm(e.Xi2, 2.0 * e.alpha - 2.0, grid, e.b);
  e.norm_X1 = holder_norm(e.X1, e.alpha, grid, e.b);
  e.norm_X2 = holder_norm(e.X2, 2.0 * e.alpha, grid, e.b);
  e.x = e.norm_xi + e.norm_Xi2;
}

json to_json(const EnhancedNoise& e) {
  const Geometry& g = *e.geometry();
  return json{{"geometry", to_string(g.kind())},
              {"N", g.n()},
              {"seed", e.seed},
              {"eps", e.eps},
              {"alpha", e.alpha},
              {"b", e.b},
              {"n_t", e.n_t},
              {"zero_noise", e.zero_noise},
              {"c_eps_kind", e.plain_product ? "plain_product_wick" : "resonant_expectation"},
              {"c_eps_mean", e.c_eps.mean()},
              {"norms",
               {{"xi_eps", e.norm_xi}, {"Xi2", e.norm_Xi2}, {"X1", e.norm_X1}, {"X2", e.norm_X2}, {"x", e.x}}}};
}

MomentTable exp_moment_table(const std::vector<double>& noise_norms, const std::vector<double>& xi2_norms,
                             const std::vector<double>& h_grid, std::uint64_t seed) {
  if (noise_norms.size() != xi2_norms.size() || noise_norms.empty())
    throw InvalidArgument("moment probe needs matching non-empty samples");
  MomentTable t;
  t.noise_norms = noise_norms;
  t.xi2_norms = xi2_norms;
  auto gen = make_stream(seed, Stream::Bootstrap);
  bool prefix = true;
  for (double h : h_grid) {
    std::vector<double> ex(noise_norms.size());
    for (std::size_t i = 0; i < ex.size(); ++i)
      ex[i] = std::exp(h * (noise_norms[i] * noise_norms[i] + xi2_norms[i]));
    MomentRow row;
    row.h = h;
    row.estimate = mean(ex);
    const auto ci = bootstrap_ci(ex, [](const std::vector<double>& v) { return mean(v); }, gen, 500);
    row.ci_low = ci.first;
    row.ci_high = ci.second;
    row.stable = std::isfinite(row.estimate) && std::isfinite(row.ci_high) && row.ci_low > 0.0 &&
                 row.ci_high / row.ci_low < 2.0;
    prefix = prefix && row.stable;
    if (prefix) t.largest_stable_h = std::max(t.largest_stable_h, h);
    t.rows.push_back(row);
  }
  return t;
}

MomentTable exp_moment_probe(GeometryPtr geo, int seeds, const std::vector<double>& h_grid, double eps,
                             const TimeGrid& grid, double alpha, std::uint64_t seed0) {
  if (seeds < 100) throw InvalidArgument("moment probe needs at least 100 seeds");
  const Field c = renorm_constant_exact(geo, eps, grid);
  std::vector<double> a(static_cast<std::size_t>(seeds)), b(a.size());
  parallel_for(a.size(), [&](std::size_t i) {
    const EnhancedNoise e = enhance_field(sample_white(geo, seed0 + i).field(), seed0 + i, eps, grid, alpha, c);
    a[i] = e.norm_xi;
    b[i] = e.norm_Xi2;
  });
  return exp_moment_table(a, b, h_grid, seed0);
}

json to_json(const MomentTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"h", r.h}, {"estimate", r.estimate}, {"ci", {r.ci_low, r.ci_high}}, {"stable", r.stable}});
  return json{{"rows", rows}, {"largest_stable_h", t.largest_stable_h}, {"samples", t.noise_norms.size()}};
}

}  // namespace heatpara
