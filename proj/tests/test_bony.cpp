#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "heatpara/bony.hpp"

using namespace heatpara;

namespace {

Field real_mode(const GeometryPtr& g, int k0, int k1) { return Field::mode(g, k0, k1) + Field::mode(g, -k0, -k1); }

Field apply_L(const Field& f) {
  return apply_multiplier(f, [](double l) { return l; });
}

}  // namespace

TEST_CASE("b = 2 drain from the g slot") {
  auto leaves = drain_from(2, GSlot);
  std::vector<std::array<int, 3>> sig;
  for (const auto& t : leaves) {
    sig.push_back(t.signature());
    CHECK(t.coeff == 1);
  }
  std::sort(sig.begin(), sig.end());
  std::vector<std::array<int, 3>> expect = {{0, 2, 2}, {1, 1, 2}, {1, 1, 2}, {2, 0, 2}};
  CHECK(sig == expect);
}

TEST_CASE("signature bookkeeping") {
  for (int b : {2, 4, 6, 8}) {
    std::size_t total = 0;
    for (int s = 0; s < 3; ++s) {
      auto leaves = drain_from(b, s);
      total += leaves.size();
      for (const auto& t : leaves) {
        const auto a = t.signature();
        CHECK(a[0] + a[1] + a[2] == 2 * b);
        CHECK(a[s] == b);
        CHECK(std::max({a[0], a[1], a[2]}) == b);
      }
    }
    CHECK(total == 3u * (1u << b));
    const auto d = redistribute(b);
    CHECK(d.unmerged_count == total);
    // exclusive and exhaustive classification
    for (const auto& t : d.para_fg) CHECK(classify(t, b) == TermClass::ParaFG);
    for (const auto& t : d.para_gf) CHECK(classify(t, b) == TermClass::ParaGF);
    for (const auto& t : d.resonant) {
      CHECK(2 * t.signature()[1] >= b);
      CHECK(2 * t.signature()[2] >= b);
    }
    CHECK(d.para_fg.size() == d.para_gf.size());
  }
  CHECK(decomposition(4).unmerged_count <= 48u);
  CHECK_THROWS_AS(redistribute(3), InvalidArgument);
  CHECK_THROWS_AS(redistribute(10), InvalidArgument);
}

TEST_CASE("term multipliers sum to the undistributed integrand") {
  for (int b : {2, 4, 6}) {
    const auto& d = decomposition(b);
    const auto terms = d.all();
    auto check_at = [&](std::array<double, 2> k, std::array<double, 2> l, double t) {
      double s = 0.0;
      for (const auto& term : terms) s += term_multiplier(term, d.scale, t, k, l);
      const double ref = undistributed_multiplier(b, t, k, l);
      CHECK(std::abs(s - ref) <= 1e-12 * std::abs(ref) + 1e-300);
    };
    for (double t : {0.001, 0.01, 0.05, 0.2, 1.0}) {
      check_at({3, -1}, {5, 2}, t);
      check_at({5, 2}, {3, -1}, t);
    }
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> freq(-12, 12);
    std::uniform_real_distribution<double> logt(std::log(1e-3), 0.0);
    for (int r = 0; r < 100; ++r)
      check_at({double(freq(gen)), double(freq(gen))}, {double(freq(gen)), double(freq(gen))},
               std::exp(logt(gen)));
  }
}

TEST_CASE("integrated multipliers plus remainder reproduce one") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 256);
  const auto& d = decomposition(4);
  const auto terms = d.all();
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> freq(-7, 7);
  for (int r = 0; r < 100; ++r) {
    std::array<double, 2> k{double(freq(gen)), double(freq(gen))}, l{double(freq(gen)), double(freq(gen))};
    double s = remainder_multiplier(4, k, l);
    for (std::size_t j = 0; j < tg.size(); ++j)
      for (const auto& term : terms) s += tg.w[j] * term_multiplier(term, d.scale, tg.t[j], k, l);
    CHECK(std::abs(s - 1.0) < 1e-3);
  }
}

TEST_CASE("numeric evaluation matches the scalar multipliers") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 64);
  const auto& d = decomposition(4);
  const std::array<double, 2> k{2, -1}, l{3, 4};
  Field f = Field::mode(g, 2, -1), h = Field::mode(g, 3, 4);
  for (auto [terms, fn] : {std::pair{d.para_fg, &para}, std::pair{d.resonant, &resonant}}) {
    double m = 0.0;
    for (std::size_t j = 0; j < tg.size(); ++j)
      for (const auto& term : terms) m += tg.w[j] * term_multiplier(term, d.scale, tg.t[j], k, l);
    Field out = fn(f, h, tg, 4);
    const long idx = g->index_of(5, 3);
    // e_k e_l = e_{k+l} / 2pi
    CHECK(std::abs(out.coeffs()[idx] - cplx(m / (2 * std::numbers::pi))) < 1e-13);
    CHECK(std::abs(out.norm() - std::abs(out.coeffs()[idx])) < 1e-13);
  }
}

TEST_CASE("reconstruction of the product") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 256);
  for (std::uint64_t s = 1; s <= 3; ++s) {
    Field f = random_band_limited(g, 7, s), h = random_band_limited(g, 7, 100 + s);
    Field fg = multiply(f, h);
    Field rec = para(f, h, tg) + para(h, f, tg) + resonant(f, h, tg) + remainder(f, h);
    const double err = (rec - fg).norm() / fg.norm();
    CHECK(err <= 2.0 * calderon_error(fg, tg, 4));
    CHECK(err < 1e-3);
  }
  // P_g f agrees with the para_gf terms evaluated on (f, g)
  Field f = random_band_limited(g, 6, 5), h = random_band_limited(g, 6, 6);
  const auto& d = decomposition(4);
  Field pgf = evaluate_terms(d.para_gf, d.scale, f, h, tg, tg.w);
  CHECK((pgf - para(h, f, tg)).norm() < 1e-13 * pgf.norm());
}

TEST_CASE("constants and zero means") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 256);
  Field one = Field::constant(g, 1.0);
  Field h = random_band_limited(g, 7, 9);
  CHECK(para(h, one, tg).norm() < 1e-14 * h.norm());
  Field rec = para(one, h, tg) + resonant(one, h, tg) + remainder(one, h);
  CHECK((rec - h).norm() / h.norm() < 1e-3);

  for (int k : {2, 4, 6}) {
    Field a = Field::mode(g, k, 0), b = Field::mode(g, -k, 0);
    CHECK(std::abs(resonant(a, b, tg).mean()) > 1e-3);
    CHECK(std::abs(para(a, b, tg).mean()) < 1e-15);
    CHECK(std::abs(para(b, a, tg).mean()) < 1e-15);
  }
}

TEST_CASE("high-low regime is dominated by the paraproduct") {
  auto g = Geometry::make(GeometryKind::Torus, 64);
  TimeGrid tg = TimeGrid::make(*g, 256);
  for (int r : {16, 24}) {
    Field f = real_mode(g, 1, 0), h = real_mode(g, r, 0);
    Field fg = multiply(f, h);
    CHECK((fg - para(f, h, tg)).norm() / fg.norm() < 0.1);
  }
}

TEST_CASE("bilinearity and adjoints") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 128);
  Field f = random_band_limited(g, 8, 1), f2 = random_band_limited(g, 8, 2), h = random_band_limited(g, 8, 3);
  Field lhs = para(2.5 * f + f2, h, tg);
  Field rhs = 2.5 * para(f, h, tg) + para(f2, h, tg);
  CHECK((lhs - rhs).norm() < 1e-13 * lhs.norm());

  Field v = random_band_limited(g, 12, 4);
  for (double s : {1.0, 0.01}) {
    const auto w = tg.truncated_weights(s);
    const auto& d = decomposition(4);
    Field pu = evaluate_terms(d.para_fg, d.scale, f, h, tg, w);
    const double a = inner_product(v, pu);
    const double b = inner_product(para_adjoint(v, h, tg, w), f);
    CHECK(std::abs(a - b) < 1e-12 * (std::abs(a) + v.norm() * pu.norm()));
    // the g-slot adjoint of the resonant terms
    Field r = resonant(f, h, tg);
    Field rg = evaluate_terms(d.resonant, d.scale, v, f, tg, tg.w, GSlot);
    CHECK(std::abs(inner_product(v, r) - inner_product(rg, h)) < 1e-12 * v.norm() * r.norm());
  }
  Field ip = intertwined_para(f, h, tg);
  const double a = inner_product(v, ip);
  const double b = inner_product(intertwined_para_adjoint(v, h, tg, tg.w), f);
  CHECK(std::abs(a - b) < 1e-12 * v.norm() * ip.norm());
}

TEST_CASE("truncated and intertwined paraproducts") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 256);
  Field f = random_band_limited(g, 8, 21), h = random_band_limited(g, 8, 22);
  Field full = para(f, h, tg), trunc = para_truncated(f, h, tg, 1.0);
  CHECK(full.coeffs() == trunc.coeffs());
  Field lo = para_truncated(f, h, tg, 0.01), hi = para_truncated(f, h, tg, 0.01, 4, true);
  CHECK((lo + hi - full).norm() < 1e-13 * full.norm());
  CHECK_THROWS_AS(para_truncated(f, h, tg, 0.0), InvalidArgument);
  CHECK_THROWS_AS(para_truncated(f, h, tg, 1.5), InvalidArgument);

  Field pl = para(f, apply_L(h), tg);
  Field res = apply_L(intertwined_para(f, h, tg)) - pl + heat(pl, 1.0);
  CHECK(res.norm() < 1e-9);
  CHECK(inverse_L_multiplier(1.0) == doctest::Approx(0.6321206).epsilon(1e-7));
  for (std::uint64_t s = 0; s < 10; ++s) {
    Field a = random_band_limited(g, 8, 40 + s), c = random_band_limited(g, 8, 60 + s);
    Field x = intertwined_para(a, c, tg), y = intertwined_para_explicit(a, c, tg);
    CHECK((x - y).norm() / x.norm() < 1e-2);
  }
}

TEST_CASE("canonical pair duality") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 128);
  for (std::uint64_t s = 0; s < 5; ++s) {
    Field a = random_band_limited(g, 10, 3 * s + 1), b = random_band_limited(g, 10, 3 * s + 2),
          c = random_band_limited(g, 10, 3 * s + 3);
    const double l = inner_product(a, canonical_resonant(b, c, tg));
    const double r = inner_product(canonical_para(a, b, tg), c);
    CHECK(std::abs(l - r) < 1e-8 * std::abs(l));
  }
}

TEST_CASE("square geometry is flagged, dump is complete") {
  auto sq = Geometry::make(GeometryKind::DirichletSquare, 16);
  TimeGrid tg = TimeGrid::make(*sq, 32);
  Field f = random_band_limited(sq, 4, 1);
  CHECK_THROWS_AS(para(f, f, tg), GeometryLimitation);
  const json j = to_json(decomposition(4));
  CHECK(j["para_fg"].size() + j["para_gf"].size() + j["resonant"].size() == decomposition(4).all().size());
  bool any_incompatible = false;
  for (const auto& t : decomposition(4).all()) any_incompatible = any_incompatible || !t.dirichlet_compatible();
  CHECK(any_incompatible);
  auto tor = Geometry::make(GeometryKind::Torus, 16);
  CHECK_THROWS_AS(para(f, random_band_limited(tor, 4, 1), tg), GeometryMismatch);
  CHECK(leading_triples(4).size() == 3);
}
