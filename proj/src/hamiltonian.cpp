#include "heatpara/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "heatpara/lanczos.hpp"
#include "heatpara/rng.hpp"

namespace heatpara {

Field potential(const EnhancedNoise& xi, bool subtract_c) {
  return subtract_c ? xi.xi_eps - xi.c_eps : xi.xi_eps;
}

Field apply_schrodinger(const Field& V, const Field& u) {
  require_same_geometry(V, u);
  return laplacian(u) + multiply(V, u);
}

Field apply_H_eps(const EnhancedNoise& xi, const Field& u, bool subtract_c) {
  return apply_schrodinger(potential(xi, subtract_c), u);
}

Eigen::MatrixXd dense_operator(const Field& V) {
  const Geometry& g = V.geo();
  const Eigen::Index n = static_cast<Eigen::Index>(g.real_dim());
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    H.col(j) = g.to_real(apply_schrodinger(V, g.from_real(e)));
    e[j] = 0.0;
  }
  return 0.5 * (H + H.transpose());
}

std::string to_string(EigenMethod m) { return m == EigenMethod::Dense ? "dense" : "lanczos"; }

SpectrumResult spectrum(const Field& V, int m, const SpectrumOptions& opt) {
  const Geometry& g = V.geo();
  const Eigen::Index dim = static_cast<Eigen::Index>(g.real_dim());
  if (m < 1 || m > dim) throw InvalidArgument("eigenvalue count exceeds the dimension");
  SpectrumResult r;
  r.method = opt.method;
  r.shift = opt.shift;
  std::vector<Eigen::VectorXd> vecs;
  if (opt.method == EigenMethod::Dense) {
    if (g.n() > kDenseLimit) throw InvalidArgument("dense solve requires N <= 48");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_operator(V));
    for (int i = 0; i < m; ++i) {
      r.eigenvalues.push_back(es.eigenvalues()[i]);
      vecs.push_back(es.eigenvectors().col(i));
    }
  } else {
    // shifted operator H + k_Xi; eigenvalues shifted back afterwards
    auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return g.to_real(apply_schrodinger(V, g.from_real(v))) + opt.shift * v;
    };
    const auto lr = lanczos_lowest(op, dim, m, opt.tol, opt.krylov_dim, opt.max_restarts, opt.seed);
    r.iterations = lr.iterations;
    for (int i = 0; i < m; ++i) {
      r.eigenvalues.push_back(lr.values[i] - opt.shift);
      vecs.push_back(lr.vectors[i]);
    }
  }
  for (int i = 0; i < m; ++i) {
    const Field u = g.from_real(vecs[i]);
    r.residuals.push_back((apply_schrodinger(V, u) - r.eigenvalues[i] * u).norm());
    if (opt.vectors) r.eigenvectors.push_back(u);
  }
  return r;
}

SpectrumResult spectrum(const EnhancedNoise& xi, int m, const SpectrumOptions& opt) {
  SpectrumResult r = spectrum(potential(xi, opt.subtract_c), m, opt);
  r.eps = xi.eps;
  r.seed = xi.seed;
  return r;
}

json to_json(const SpectrumResult& r, const Geometry& geo, const Calibration& cal) {
  return json{{"geometry", to_string(geo.kind())},
              {"N", geo.n()},
              {"seed", r.seed},
              {"eps", r.eps},
              {"shift", r.shift},
              {"eigenvalues", r.eigenvalues},
              {"residuals", r.residuals},
              {"method", to_string(r.method)},
              {"calibration", {{"k", cal.k}, {"m", cal.m}}}};
}

DomainMap make_domain_map(const EnhancedNoise& xi, const TimeGrid& grid, double s, double fp_tol, int max_iter) {
  if (!(s > grid.t_min && s <= 1.0)) throw InvalidArgument("truncation scale s must lie in (t_min, 1]");
  if (!xi.geometry()->is_torus()) throw GeometryLimitation("domain maps are implemented on the torus only");
  DomainMap dm;
  dm.xi = &xi;
  dm.grid = grid;
  dm.s = s;
  dm.fp_tol = fp_tol;
  dm.max_iter = max_iter;
  return dm;
}

Field phi_s(const DomainMap& dm, const Field& u) {
  return u - intertwined_para_truncated(u, dm.X(), dm.grid, dm.s, dm.xi->b);
}

GammaResult gamma(DomainMap& dm, const Field& u_sharp) {
  const Field X = dm.X();
  GammaResult r;
  r.u = u_sharp;
  double prev = 0.0;
  for (int it = 1; it <= dm.max_iter; ++it) {
    Field next = u_sharp + intertwined_para_truncated(r.u, X, dm.grid, dm.s, dm.xi->b);
    const double inc = (next - r.u).norm();
    r.u = std::move(next);
    r.iterations = it;
    r.increments.push_back(inc);
    if (prev > 0.0) r.q = inc / prev;
    if (inc <= dm.fp_tol * (1.0 + u_sharp.norm())) break;
    if (it >= 4 && r.q >= 1.0) {
      dm.q = r.q;
      throw NonContraction(r.q);
    }
    prev = inc;
  }
  dm.q = r.q;
  if (r.increments.back() > dm.fp_tol * (1.0 + u_sharp.norm()))
    throw ConvergenceError("Gamma fixed point did not reach fp_tol");
  return r;
}

namespace {

// uH-free part of R(u) for given u, u# = u - P~_u X with the full paraproduct.
Field remainder_terms(const EnhancedNoise& e, const TimeGrid& grid, const Field& u) {
  const int b = e.b;
  const Field& xi = e.xi_eps;
  const Field& X1 = e.X1;
  const Field& X2 = e.X2;
  const Field& Xi2 = e.Xi2;
  Field r = corrector_C(u, X1, xi, grid, b);
  r += resonant(u, Xi2, grid, b);
  r += para(Xi2, u, grid, b);
  r += remainder(u, Xi2, b);
  r += swap_S(u, X1, xi, grid, b);
  r += para(xi, intertwined_para(u, X2, grid, b), grid, b);
  r += commutator_D(u, X2, xi, grid, b);
  r += para(u, resonant(X2, xi, grid, b), grid, b);
  r += remainder(u, xi, b);
  // e^{-L} corrections from the regularized inverse in the intertwining
  const Field src = xi + Xi2 + para(xi, X1, grid, b);
  r += para(u, heat(src, 1.0), grid, b);
  r -= heat(para(u, laplacian(X1 + X2), grid, b), 1.0);
  return r;
}

}  // namespace

Field paracontrolled_remainder(const EnhancedNoise& xi, const TimeGrid& grid, const Field& u) {
  if (!xi.geometry()->is_torus()) throw GeometryLimitation("paracontrolled representation is torus-only");
  return remainder_terms(xi, grid, u);
}

Field apply_H_paracontrolled(const EnhancedNoise& e, const DomainMap& dm, const Field& u) {
  const int b = e.b;
  const TimeGrid& grid = dm.grid;
  const Field& xi = e.xi_eps;
  const Field us = phi_s(dm, u);
  // u# = u#_s - (P~ - P~^s)_u X; the difference is smooth
  const Field d = intertwined_para_truncated(u, dm.X(), grid, dm.s, b, true);
  Field h = laplacian(us) + para(xi, us, grid, b) + resonant(us, xi, grid, b);
  h -= laplacian(d) + para(xi, d, grid, b) + resonant(d, xi, grid, b);
  h += remainder_terms(e, grid, u);
  return h;
}

namespace {

double pw(double v, double p) { return std::pow(v, p); }

// (m / alpha) x (1 + x): the factor of s^{alpha/4} in m^+ and m^-
double m_over_alpha_term(double x, double alpha, const Calibration& cal) { return cal.m / alpha * x * (1 + x); }

}  // namespace

BoundConstants bound_constants(double x, double alpha, double delta, double s, const Calibration& cal) {
  if (!(delta > 0.0 && delta < 1.0) || !(s > 0.0 && s < 1.0))
    throw InvalidArgument("delta and s must lie in (0, 1)");
  BoundConstants c;
  c.delta = delta;
  c.s = s;
  c.alpha = alpha;
  c.x = x;
  c.cal = cal;
  const double beta = 0.5 * (2.0 / 3.0 + alpha);
  c.beta = beta;
  const double k = cal.k, m = cal.m;
  const double ab = (alpha - beta) / 4.0;
  c.m2 = k * (pw(s, (alpha - 2.0) / 2.0) * x * (1 + x * x) + pw(s, ab) * x * x * (1 + pw(x, 3)) +
              pw(delta, -3.0) * (1 + pw(s, alpha / 4) * x * (1 + x)) * pw(x, 4) * (1 + pw(x, 8)));
  const double r = beta / (1.0 - beta);
  const double inner = x * (1 + x * x) + pw(s, ab) * x * x * (1 + x);
  c.m1 = k * (x * (1 + x * x) + pw(s, ab) * x * x * (1 + pw(x, 3)) + pw(s, (alpha - 2.0) / 2.0) * x * (1 + x * x) +
              pw(s, (alpha - 4.0) / 2.0) * x + pw(delta, -r) * pw(inner, r) * (1 + pw(s, alpha / 4) * x * (1 + x)));
  const double eta = m / alpha * pw(s, alpha / 4) * x * (1 + x);
  c.m_plus = (1 + delta) * (1 + eta);
  c.m_minus = eta < 1.0 ? (1 - delta) / (1 - eta) : std::numeric_limits<double>::infinity();
  c.k_xi = c.m1 + 1.0;
  c.s0 = x > 0.0 ? pw(alpha / (m * x * (1 + x)), 4.0 / alpha) : std::numeric_limits<double>::infinity();
  return c;
}

json to_json(const BoundConstants& b) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  return json{{"delta", b.delta}, {"s", b.s},           {"alpha", b.alpha},         {"beta", b.beta},
              {"x", b.x},         {"m1", b.m1},         {"m2", b.m2},               {"m_plus", b.m_plus},
              {"m_minus", num(b.m_minus)}, {"k_xi", b.k_xi}, {"s0", num(b.s0)},
              {"calibration", {{"k", b.cal.k}, {"m", b.cal.m}}}};
}

EigenvalueBounds eigenvalue_bounds(double x, double alpha, double delta, const Calibration& cal,
                                   double lambda_max) {
  EigenvalueBounds r;
  r.delta = delta;
  r.lambda_max = lambda_max;
  const double tm = m_over_alpha_term(x, alpha, cal);
  // lower: eta = delta gives m^- = 1; upper: (1 + delta')^2 = 1 + delta with eta = delta'
  const double dp = std::sqrt(1.0 + delta) - 1.0;
  auto s_for = [&](double eta) { return tm > 0.0 ? std::min(pw(eta / tm, 4.0 / alpha), 0.5) : 0.5; };
  r.lower = bound_constants(x, alpha, delta, s_for(delta), cal);
  r.upper = bound_constants(x, alpha, dp, s_for(dp), cal);
  const double eta_up = tm * pw(r.upper.s, alpha / 4);
  r.lower_C = r.lower.m1 + std::max(0.0, 1.0 - r.lower.m_minus) * lambda_max;
  r.upper_C = 1.0 + eta_up + r.upper.m2;
  return r;
}

CalibrationReport calibrate(GeometryPtr geo, const TimeGrid& grid, double eps, double alpha, double delta,
                            int realizations, int fields, std::uint64_t seed, double safety) {
  if (!(safety >= 1.0)) throw InvalidArgument("calibration safety factor must be >= 1");
  CalibrationReport rep;
  rep.safety = safety;
  auto gen = make_stream(seed, Stream::Calibration);
  std::vector<EnhancedNoise> es;
  const Field c = renorm_constant_exact(geo, eps, grid);
  for (int r = 0; r < realizations; ++r) {
    const std::uint64_t sd = gen();
    es.push_back(enhance_field(sample_white(geo, sd).field(), sd, eps, grid, alpha, c));
  }
  // m: ||u -> P~^s_u X||_{L2 -> L2} = m s^{alpha/4} x (1 + x) / alpha
  for (const auto& e : es) {
    ProbeContext ctx{geo, grid, e.b, e.X1 + e.X2, seed, 30, 1e-3};
    for (double s : {0.25, 1.0 / 16}) {
      const LinearOp op = find_probe("ptilde_truncated").make(ctx, s);
      const double nrm = operator_norm(op, geo, 0.0, 0.0, seed, ctx.max_iter, ctx.tol).norm;
      rep.m_raw = std::max(rep.m_raw, nrm * alpha / (pw(s, alpha / 4) * e.x * (1 + e.x)));
    }
  }
  rep.cal.m = safety * rep.m_raw;
  // k: H^2 and H^1 inequalities at the scales used by the eigenvalue bounds
  const Calibration unit{1.0, rep.cal.m};
  for (const auto& e : es) {
    const EigenvalueBounds eb = eigenvalue_bounds(e.x, alpha, delta, unit);
    DomainMap up = make_domain_map(e, grid, eb.upper.s), lo = make_domain_map(e, grid, eb.lower.s);
    std::vector<Field> us;
    if (geo->n() <= kDenseLimit) {
      SpectrumOptions so;
      so.vectors = true;
      for (auto& v : spectrum(e, 5, so).eigenvectors) us.push_back(v);
    }
    for (int f = 0; f < fields; ++f) us.push_back(gamma(up, random_band_limited(geo, 6, gen(), 1.0)).u);
    for (const Field& u : us) {
      const Field hu = apply_H_eps(e, u);
      const double nu = u.norm();
      const Field s2 = phi_s(up, u), s1 = phi_s(lo, u);
      const double need2 = (1 - (std::sqrt(1 + delta) - 1)) * sobolev_weight(s2, 2.0).norm() - hu.norm();
      rep.k_h2 = std::max(rep.k_h2, need2 / (eb.upper.m2 * nu));
      const double need1 = (1 - delta) * inner_product(s1, laplacian(s1)) - inner_product(u, hu);
      rep.k_h1 = std::max(rep.k_h1, need1 / (eb.lower.m1 * nu * nu));
      ++rep.samples;
    }
  }
  rep.cal.k = safety * std::max(rep.k_h2, rep.k_h1);
  return rep;
}

json to_json(const CalibrationReport& c) {
  return json{{"k", c.cal.k}, {"m", c.cal.m},       {"m_raw", c.m_raw},
              {"k_h2", c.k_h2}, {"k_h1", c.k_h1}, {"safety", c.safety}, {"samples", c.samples}};
}

}  // namespace heatpara
