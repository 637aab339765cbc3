// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heatpara/experiments.hpp"
#include "heatpara/report.hpp"
#include "heatpara/stats.hpp"

using namespace heatpara;

namespace {

constexpr double kAlpha = 0.9;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// all checks of a study, with the named ones listed in the detail
Outcome from_checks(const StudyReport& r, const std::vector<std::string>& names) {
  Outcome o{true, ""};
  for (const auto& n : names) {
    const Check* c = r.find(n);
    if (!c) return {false, r.name + ": missing check " + n};
    o.ok = o.ok && c->passed;
    o.detail += (o.detail.empty() ? "" : ", ") + n + "=" + fmt("%.4g", c->value) + (c->passed ? "" : "(fail)");
  }
  return o;
}

std::vector<std::uint64_t> seed_range(std::uint64_t a, std::uint64_t b) {
  std::vector<std::uint64_t> s;
  for (auto i = a; i <= b; ++i) s.push_back(i);
  return s;
}

std::vector<double> halvings(double first, int count) {
  std::vector<double> e;
  for (int i = 0; i < count; ++i) e.push_back(first / std::pow(2.0, i));
  return e;
}

Outcome calderon_criterion() {
  double e256 = 0.0, e2048 = 0.0;
  for (auto kind : {GeometryKind::Torus, GeometryKind::DirichletSquare}) {
    auto g = Geometry::make(kind, 64);
    const Field f = random_band_limited(g, 16, 1);
    e256 = std::max(e256, calderon_error(f, TimeGrid::make(*g, 256), 4));
    e2048 = std::max(e2048, calderon_error(f, TimeGrid::make(*g, 2048), 4));
  }
  return {e256 < 1e-3 && e2048 < 1e-5, "err(256)=" + fmt("%.3g", e256) + ", err(2048)=" + fmt("%.3g", e2048)};
}

Outcome bony_criterion() {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  const TimeGrid tg = TimeGrid::make(*g, 256);
  double worst_ratio = 0.0, worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Field f = random_band_limited(g, 8, 10 + 2 * k), h = random_band_limited(g, 8, 11 + 2 * k);
    const Field fg = multiply(f, h);
    const Field rec = para(f, h, tg, 4) + para(h, f, tg, 4) + resonant(f, h, tg, 4) + remainder(f, h, 4);
    const double be = (rec - fg).norm() / fg.norm();
    const double ce = calderon_error(fg, tg, 4);
    worst = std::max(worst, be);
    worst_ratio = std::max(worst_ratio, be / ce);
  }
  return {worst_ratio <= 2.0, "max rel err=" + fmt("%.3g", worst) + ", max ratio to Calderon=" + fmt("%.3g", worst_ratio)};
}

Outcome redistribution_criterion() {
  const auto& d = decomposition(4);
  const auto terms = d.all();
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> freq(-16, 16);
  std::uniform_real_distribution<double> logt(std::log(1e-4), 0.0);
  double worst = 0.0;
  for (int r = 0; r < 100; ++r) {
    const std::array<double, 2> k{double(freq(gen)), double(freq(gen))}, l{double(freq(gen)), double(freq(gen))};
    const double t = std::exp(logt(gen));
    double s = 0.0;
    for (const auto& term : terms) s += term_multiplier(term, d.scale, t, k, l);
    const double ref = undistributed_multiplier(4, t, k, l);
    if (ref != 0.0) worst = std::max(worst, std::abs(s - ref) / std::abs(ref));
    else worst = std::max(worst, std::abs(s));
  }
  return {worst < 1e-12, "max rel err=" + fmt("%.3g", worst)};
}

Outcome duality_criterion() {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  const TimeGrid tg = TimeGrid::make(*g, 256);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Field a = random_band_limited(g, 6, 300 + 3 * k), f = random_band_limited(g, 8, 301 + 3 * k),
                h = random_band_limited(g, 8, 302 + 3 * k);
    const double rel = std::abs(duality_A_canonical(a, f, h, tg, 4)) / std::abs(inner_product(a, canonical_resonant(f, h, tg, 4)));
    worst = std::max(worst, rel);
  }
  return {worst < 1e-8, "max rel |A|=" + fmt("%.3g", worst)};
}

Outcome zero_noise_criterion() {
  double err = 0.0;
  for (auto kind : {GeometryKind::Torus, GeometryKind::DirichletSquare}) {
    auto g = Geometry::make(kind, 32);
    const TimeGrid tg = TimeGrid::make(*g, 128);
    const auto z = enhance(g, 1, 1.0 / 32, tg, kAlpha, {.zero_noise = true});
    const auto sp = spectrum(z, 10);
    const auto table = g->eigenvalue_table();
    for (int i = 0; i < 10; ++i) err = std::max(err, std::abs(sp.eigenvalues[i] - table[i]));
  }
  auto g = Geometry::make(GeometryKind::Torus, 32);
  const TimeGrid tg = TimeGrid::make(*g, 128);
  const Field V = potential(enhance(g, 2, 1.0 / 32, tg, kAlpha));
  const auto r0 = spectrum(V, 10), r1 = spectrum(V + Field::constant(g, 2.5), 10);
  double sh = 0.0;
  for (int i = 0; i < 10; ++i) sh = std::max(sh, std::abs(r1.eigenvalues[i] - r0.eigenvalues[i] - 2.5));
  return {err < 1e-9 && sh < 1e-9, "table err=" + fmt("%.3g", err) + ", shift err=" + fmt("%.3g", sh)};
}

Outcome renorm_criterion() {
  StudyConfig c;
  c.N = 64;
  c.n_t = 256;
  c.eps = halvings(1.0 / 16, 7);
  const auto r = renorm_study(c, 200);
  return from_checks(r, {"slope_vs_1_over_4pi", "exact_vs_lattice", "mc_within_3_stderr"});
}

std::optional<StudyReport> resolvent_cache;

const StudyReport& resolvent_run() {
  if (!resolvent_cache) {
    StudyConfig c;
    c.N = 32;
    c.n_t = 128;
    c.eps = halvings(1.0 / 8, 5);
    c.seeds = seed_range(1, 10);
    resolvent_cache = resolvent_convergence_study(c, 10);
  }
  return *resolvent_cache;
}

Outcome necessity_criterion() {
  return from_checks(resolvent_run(), {"unrenormalized_drift", "successive_differences_decrease"});
}

Outcome resolvent_criterion() { return from_checks(resolvent_run(), {"eigen_gap_slope"}); }

Outcome bounds_criterion() {
  StudyConfig c;
  c.N = 32;
  c.n_t = 128;
  c.delta = 0.5;
  c.seeds = seed_range(1, 20);
  const auto r = eigenvalue_bounds_study(c, 30);
  return from_checks(r, {"violations", "C_prime_polynomial_degree"});
}

Outcome weyl_criterion() {
  StudyConfig c;
  c.N = 32;
  c.n_t = 128;
  c.zero_noise = true;
  const auto t = weyl_study(c);
  c.geometry = GeometryKind::DirichletSquare;
  const auto s = weyl_study(c);
  c.geometry = GeometryKind::Torus;
  c.zero_noise = false;
  c.eps = {1.0 / 64};
  c.seeds = seed_range(1, 10);
  const auto n = weyl_study(c);
  const auto a = from_checks(t, {"slope_vs_vol_over_4pi"}), b = from_checks(s, {"slope_vs_vol_over_4pi"}),
             d = from_checks(n, {"slope_vs_vol_over_4pi"});
  return {a.ok && b.ok && d.ok, "torus " + a.detail + "; square " + b.detail + "; noisy " + d.detail};
}

Outcome gamma_criterion() {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  const TimeGrid tg = TimeGrid::make(*g, 128);
  const auto e = enhance(g, 3, 1.0 / 32, tg, kAlpha);
  std::vector<double> s, q;
  for (double sc : {0.5, 0.25, 0.125, 1.0 / 16, 1.0 / 32}) {
    auto d = make_domain_map(e, tg, sc);
    const auto r = gamma(d, random_band_limited(g, 6, 7));
    s.push_back(sc);
    q.push_back(r.q);
  }
  const double qexp = fit_scaling("gamma_q", "L2", "L2", s, q).exponent;
  auto dm = make_domain_map(e, tg, 0.25);
  double inv = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Field u = random_band_limited(g, 8, 500 + k);
    inv = std::max(inv, (gamma(dm, phi_s(dm, u)).u - u).norm() / u.norm());
  }
  auto d2 = make_domain_map(e, tg, 1.0 / 16);
  const Field u = gamma(dm, random_band_limited(g, 6, 3, 1.0)).u;
  const Field h1 = apply_H_paracontrolled(e, dm, u), h2 = apply_H_paracontrolled(e, d2, u);
  const double rep = (h1 - h2).norm() / h1.norm();
  const double combined = dm.fp_tol + d2.fp_tol;
  return {qexp >= kAlpha / 4 && inv < 1e-8 && rep < combined,
          "q exponent=" + fmt("%.3f", qexp) + " (>= " + fmt("%.3f", kAlpha / 4) + "), inverse err=" + fmt("%.3g", inv) +
              ", representation gap=" + fmt("%.3g", rep) + " (< " + fmt("%.1g", combined) + ")"};
}

Outcome opnorm_criterion() {
  StudyConfig c;
  c.N = 64;
  c.n_t = 128;
  c.eps = halvings(1.0 / 8, 6);
  const auto r = opnorm_study(c, {0.25, 1.0 / 16, 1.0 / 64, 1.0 / 256});
  return from_checks(r, {"ptilde_truncated_exponent", "ptilde_complement_exponent", "corrector_bounded"});
}

Outcome tails_criterion() {
  StudyConfig c;
  c.N = 16;
  c.n_t = 128;
  c.eps = {1.0 / 16};
  const auto r = tail_study(c, 1, {}, 500);
  Outcome o = from_checks(r, {"cdf_monotone", "half_sample_within_dkw", "left_tail_stretched_exponential",
                              "right_tail_stretched_exponential", "tails_monotone"});
  auto g = Geometry::make(GeometryKind::Torus, 32);
  const TimeGrid tg = TimeGrid::make(*g, 128);
  std::vector<double> v;
  for (std::uint64_t s = 1; s <= 2000; ++s) v.push_back(holder_norm(sample_white(g, s).field(), kAlpha - 2.0, tg));
  const double curv = log_survival_curvature(v);
  o.ok = o.ok && curv < 0.0;
  o.detail += ", norm log-survival curvature=" + fmt("%.3g", curv) + " (< 0)";
  return o;
}

Outcome nls_criterion() {
  StudyConfig c;
  c.N = 16;
  c.n_t = 128;
  c.eps = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.seeds = {1, 2, 3};
  NlsOptions o;
  o.T = 1.0;
  o.dt = 1e-2;
  return from_checks(nls_study(c, o), {"mass_drift", "free_phase_rotation", "cauchy_in_eps"});
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "Calderon reconstruction", 5, calderon_criterion},
      {2, "Bony reconstruction identity", 30, bony_criterion},
      {3, "redistribution algebra", 1, redistribution_criterion},
      {4, "canonical duality", 5, duality_criterion},
      {5, "zero-noise spectrum and shift covariance", 10, zero_noise_criterion},
      {6, "renormalization divergence", 120, renorm_criterion},
      {7, "renormalization necessity", 1200, necessity_criterion},
      {8, "resolvent convergence", 1200, resolvent_criterion},
      {9, "eigenvalue bounds", 1800, bounds_criterion},
      {10, "Weyl law", 2400, weyl_criterion},
      {11, "Gamma machinery", 300, gamma_criterion},
      {12, "operator-norm scalings", 900, opnorm_criterion},
      {13, "tail surrogates", 1800, tails_criterion},
      {14, "NLS", 600, nls_criterion},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt < c.budget_s;
    const bool ok = o.ok && in_time;
    if (!ok) ++failed;
    std::printf("[%s] %2d %s: %s; time %.1fs (budget %.0fs%s)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), dt, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
