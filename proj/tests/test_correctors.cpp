#include <cmath>
#include <random>

#include "doctest.h"
#include "heatpara/correctors.hpp"

using namespace heatpara;

namespace {

Field highpass(const Field& f, double cut) {
  return apply_multiplier(f, [cut](double l) { return l >= cut ? 1.0 : 0.0; });
}

Field rough_field(const GeometryPtr& g, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd r(g->real_dim());
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = nd(gen);
  return -1.0 * inverse_L(g->from_real(r));
}

}  // namespace

TEST_CASE("zero arguments and linearity") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  TimeGrid tg = TimeGrid::make(*g, 64);
  Field a = random_band_limited(g, 6, 1), b = random_band_limited(g, 6, 2), c = random_band_limited(g, 6, 3);
  Field z(g);
  for (auto* op : {&corrector_C, &commutator_D, &swap_S}) {
    CHECK(op(z, b, c, tg, 4).norm() == 0.0);
    CHECK(op(a, z, c, tg, 4).norm() == 0.0);
    CHECK(op(a, b, z, tg, 4).norm() == 0.0);
    Field b2 = random_band_limited(g, 6, 4);
    Field lhs = op(a, 3.0 * b + b2, c, tg, 4);
    Field rhs = 3.0 * op(a, b, c, tg, 4) + op(a, b2, c, tg, 4);
    CHECK((lhs - rhs).norm() < 1e-12 * lhs.norm());
  }
  CHECK(duality_A(z, b, c, tg) == 0.0);
  const double base = duality_A(a, b, c, tg);
  const double scaled = duality_A(a, b, 2.0 * c + a, tg);
  CHECK(std::abs(scaled - 2.0 * base - duality_A(a, b, a, tg)) < 1e-12 * (std::abs(scaled) + std::abs(base) + 1.0));
}

TEST_CASE("D - C identity") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  TimeGrid tg = TimeGrid::make(*g, 64);
  Field a1 = random_band_limited(g, 6, 5), a2 = random_band_limited(g, 6, 6), b = random_band_limited(g, 6, 7);
  Field lhs = commutator_D(a1, a2, b, tg) - corrector_C(a1, a2, b, tg);
  Field pi = resonant(a2, b, tg);
  Field rhs = multiply(a1, pi) - para(a1, pi, tg);
  CHECK((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
}

TEST_CASE("constant first argument") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 256);
  Field one = Field::constant(g, 1.0);
  Field a2 = highpass(random_band_limited(g, 12, 2), 25), b = highpass(random_band_limited(g, 12, 3), 25);
  const double scale = a2.norm() * b.norm();
  CHECK(sobolev_weight(corrector_C(one, a2, b, tg), 1.0).norm() < 1e-2 * scale);
  // P_1 = Id - P_1^2 exactly on constants, so D(1,.,.) keeps the smooth part P_1^2 Pi(a2,b)
  Field pi = resonant(a2, b, tg);
  Field d = commutator_D(one, a2, b, tg);
  Field smooth = propagator(propagator(pi, 1.0, 4), 1.0, 4);
  CHECK((d - smooth).norm() < 1e-3 * scale);
  // likewise S(a1,a2,1) = (Id - P_1^2) P~_{a1} a2 - P_{a1}(Id - P_1^2) a2
  Field a1 = random_band_limited(g, 10, 1);
  auto p1sq = [](const Field& f) { return propagator(propagator(f, 1.0, 4), 1.0, 4); };
  Field pt = intertwined_para(a1, a2, tg);
  Field expect = pt - p1sq(pt) - para(a1, a2 - p1sq(a2), tg);
  CHECK((swap_S(a1, a2, one, tg) - expect).norm() < 1e-3 * expect.norm());
}

TEST_CASE("almost duality") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  TimeGrid tg = TimeGrid::make(*g, 64);
  for (std::uint64_t s = 0; s < 4; ++s) {
    Field a = random_band_limited(g, 7, 10 + s), b = random_band_limited(g, 7, 20 + s),
          c = random_band_limited(g, 7, 30 + s);
    const double ref = std::abs(inner_product(a, canonical_resonant(b, c, tg)));
    CHECK(std::abs(duality_A_canonical(a, b, c, tg)) < 1e-8 * ref);
  }
}

TEST_CASE("sobolev spaces and power iteration") {
  CHECK(parse_sobolev_index("L2") == 0.0);
  CHECK(parse_sobolev_index("H2") == 2.0);
  CHECK(parse_sobolev_index("H-1.5") == -1.5);
  CHECK_THROWS_AS(parse_sobolev_index("C2"), InvalidArgument);
  auto g = Geometry::make(GeometryKind::Torus, 16);
  // a multiplier's norm is its largest value on the table
  LinearOp heat1{[](const Field& u) { return heat(u, 0.1); }, [](const Field& u) { return heat(u, 0.1); }};
  CHECK(operator_norm(heat1, g, 0.0, 0.0, 3, 100, 1e-10).norm == doctest::Approx(1.0).epsilon(1e-8));
  LinearOp id{[](const Field& u) { return u; }, [](const Field& u) { return u; }};
  // H^0 -> H^-2: (1 + lambda)^{-1} at lambda = 0
  CHECK(operator_norm(id, g, 0.0, -2.0, 3).norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(find_probe("nope"), InvalidArgument);
}

TEST_CASE("scaling probes") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  ProbeContext ctx{g, TimeGrid::make(*g, 64), 4, rough_field(g, 9), 1, 30, 1e-3};
  const std::vector<double> sc = {0.25, 1.0 / 16, 1.0 / 64};
  CHECK(std::abs(scaling_probe("identity", ctx, sc).exponent) < 1e-3);
  auto r = scaling_probe("ptilde_truncated", ctx, sc);
  CHECK(r.exponent >= 0.9 / 4 - 0.1);
  for (std::size_t i = 1; i < r.scales.size(); ++i) CHECK(r.scales[i] < r.scales[i - 1]);
}
