#include <cmath>
#include <cstdio>
#include <numbers>

#include <zlib.h>

#include "doctest.h"
#include "heatpara/noise.hpp"
#include "heatpara/stats.hpp"

using namespace heatpara;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double mean_norm(const std::vector<double>& v) { return mean(v); }

}  // namespace

TEST_CASE("white noise coefficients") {
  auto g = Geometry::make(GeometryKind::Torus, 64);
  const auto a = sample_white(g, 7), b = sample_white(g, 7), c = sample_white(g, 8);
  CHECK(a.coeffs == b.coeffs);
  CHECK(a.coeffs != c.coeffs);
  const double modes = static_cast<double>(g->real_dim());
  CHECK(std::abs(a.coeffs.squaredNorm() / modes - 1.0) < 3.0 / std::sqrt(modes));
  CHECK(std::abs(a.field().norm() * a.field().norm() / modes - 1.0) < 3.0 / std::sqrt(modes));

  // Kolmogorov-Smirnov over 3 x 3969 draws at the 1% level
  std::vector<double> d;
  for (std::uint64_t s : {1, 2, 3})
    for (double x : sample_white(g, s).coeffs) d.push_back(x);
  std::sort(d.begin(), d.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double f = normal_cdf(d[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / d.size()), std::abs(f - (i + 1.0) / d.size())});
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(d.size())));
}

TEST_CASE("white noise covariance") {
  auto g = Geometry::make(GeometryKind::Torus, 8);
  const int S = 400;
  const Eigen::Index n = static_cast<Eigen::Index>(g->real_dim());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < S; ++s) {
    const auto w = sample_white(g, 1000 + s);
    cov += w.coeffs * w.coeffs.transpose();
  }
  cov /= S;
  // entries have standard deviation 1/sqrt(S) off the diagonal and sqrt(2/S) on it
  const double sd = 1.0 / std::sqrt(static_cast<double>(S));
  double off = 0.0, diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      (i == j ? diag : off) = std::max(i == j ? diag : off, std::abs(cov(i, j) - (i == j ? 1.0 : 0.0)));
  CHECK(off < 4.0 * sd);
  CHECK(diag < 4.0 * std::sqrt(2.0) * sd);
}

TEST_CASE("noise norm is stable in N") {
  std::vector<double> m;
  for (int N : {32, 64, 128}) {
    auto g = Geometry::make(GeometryKind::Torus, N);
    TimeGrid tg = TimeGrid::make(*g, 64);
    std::vector<double> v;
    for (std::uint64_t s = 1; s <= 50; ++s) v.push_back(holder_norm(sample_white(g, s).field(), 0.9 - 2.0, tg));
    m.push_back(mean_norm(v));
    CHECK(std::isfinite(m.back()));
  }
  CHECK(m[1] / m[0] < 1.15);
  CHECK(m[2] / m[1] < 1.15);
}

TEST_CASE("renormalization constant on the torus") {
  auto g = Geometry::make(GeometryKind::Torus, 64);
  TimeGrid tg = TimeGrid::make(*g, 128);
  TimeGrid fine = TimeGrid::make(*g, 256);
  for (double lam : {1.0, 2.0, 5.0, 13.0, 50.0, 200.0})
    CHECK(std::abs(resonant_zero_weight(lam, fine) - resonant_zero_weight_exact(lam)) < 1e-3);
  for (int j = 4; j <= 10; ++j) {
    const double eps = std::pow(2.0, -j);
    const Field c = renorm_constant_exact(g, eps, tg);
    const auto v = c.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(*hi - *lo < 1e-10);
    CHECK(c.mean() < 0.0);
    CHECK(std::abs(c.mean() / renorm_constant_lattice(64, eps) - 1.0) < 1e-3);
  }
  CHECK(renorm_constant_exact(g, 1e3, tg).norm() < 1e-12);
  CHECK_THROWS_AS(renorm_constant_exact(g, 0.1 / g->lambda_max(), tg), InvalidArgument);
}

TEST_CASE("renormalization function on the square") {
  auto sq = Geometry::make(GeometryKind::DirichletSquare, 48);
  auto tor = Geometry::make(GeometryKind::Torus, 64);
  const double eps = 1.0 / 64;
  const auto v = renorm_constant_exact(sq, eps, TimeGrid::make(*sq, 64)).values();
  const double mid = v[24 * 48 + 24], edge = v[24 * 48 + 0], corner = v[0];
  const double torus = renorm_constant_exact(tor, eps, TimeGrid::make(*tor, 128)).mean();
  CHECK(mid < 0.0);
  CHECK(std::abs(edge) < 0.5 * std::abs(mid));
  CHECK(std::abs(corner) < 0.05 * std::abs(mid));
  CHECK(mid / torus < 2.0);
  CHECK(mid / torus > 0.5);
}

TEST_CASE("Monte Carlo renormalization") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  TimeGrid tg = TimeGrid::make(*g, 64);
  const double eps = 1.0 / 16;
  const auto two = renorm_constant_mc(g, eps, tg, 2);
  CHECK(std::isfinite(two.stderr_field.norm()));
  CHECK(two.spatial_mean_stderr > 0.0);
  CHECK_THROWS_AS(renorm_constant_mc(g, eps, tg, 1), InvalidArgument);
  std::vector<double> ls, lse;
  const double exact = renorm_constant_exact(g, eps, tg).mean();
  for (int S : {50, 200, 800}) {
    const auto mc = renorm_constant_mc(g, eps, tg, S, 10);
    ls.push_back(std::log(S));
    lse.push_back(std::log(mc.spatial_mean_stderr));
    CHECK(std::abs(mc.spatial_mean - exact) < 3.0 * mc.spatial_mean_stderr);
  }
  CHECK(std::abs(least_squares(ls, lse).slope + 0.5) < 0.1);
}

TEST_CASE("enhanced noise") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 128);
  const double eps = 1.0 / 32;
  SUBCASE("zero noise") {
    const auto e = enhance(g, 1, eps, tg, 0.9, {.zero_noise = true});
    CHECK(e.X1.norm() == 0.0);
    CHECK(e.X2.norm() == 0.0);
    CHECK(e.Xi2.norm() == 0.0);
    CHECK(e.x == 0.0);
  }
  SUBCASE("lifts") {
    const auto e = enhance(g, 2, eps, tg, 0.9);
    const Field r1 = -1.0 * laplacian(e.X1) - (e.xi_eps - heat(e.xi_eps, 1.0));
    CHECK(r1.norm() < 1e-12 * e.xi_eps.norm());
    const Field src = e.Xi2 + para(e.xi_eps, e.X1, tg);
    const Field r2 = -1.0 * laplacian(e.X2) - (src - heat(src, 1.0));
    CHECK(r2.norm() < 1e-12 * src.norm());
    CHECK(e.norm_X1 > 0.0);
    CHECK(e.x == doctest::Approx(e.norm_xi + e.norm_Xi2));
    CHECK_THROWS_AS(enhance(g, 2, eps, tg, 0.6), InvalidArgument);
  }
  SUBCASE("gauge") {
    const double c = 0.7;
    const Field xi = sample_white(g, 3).field();
    const auto a = enhance_field(xi, 3, eps, tg, 0.9);
    const auto b = enhance_field(xi + Field::constant(g, c), 3, eps, tg, 0.9);
    CHECK((b.xi_eps - a.xi_eps - Field::constant(g, c)).norm() < 1e-12);
    CHECK((b.X1 - a.X1 + Field::constant(g, c)).norm() < 1e-12);
    CHECK((b.c_eps - a.c_eps).norm() == 0.0);
    // constants drop out of Pi and of P_xi c, P_c c
    CHECK((b.Xi2 - a.Xi2).norm() < 1e-10 * a.Xi2.norm());
    const Field shift = -1.0 * inverse_L(para(Field::constant(g, c), a.X1, tg));
    CHECK((b.X2 - a.X2 - shift).norm() < 1e-10 * a.X2.norm());
    // and P_c X1 = c (X1 - P_1^2 X1) up to quadrature
    const Field p1sq = propagator(propagator(a.X1, 1.0, 4), 1.0, 4);
    CHECK((shift + c * inverse_L(a.X1 - p1sq)).norm() < 1e-2 * shift.norm());
  }
}

TEST_CASE("renormalized resonant product converges") {
  auto g = Geometry::make(GeometryKind::Torus, 32);
  TimeGrid tg = TimeGrid::make(*g, 128);
  const std::vector<double> eps = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  std::vector<Field> cs;
  for (double e : eps) cs.push_back(renorm_constant_exact(g, e, tg));
  std::vector<double> diff(eps.size() - 1, 0.0), raw(eps.size(), 0.0);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Field xi = sample_white(g, s).field();
    std::vector<EnhancedNoise> es;
    for (std::size_t i = 0; i < eps.size(); ++i) es.push_back(enhance_field(xi, s, eps[i], tg, 0.9, cs[i]));
    for (std::size_t i = 0; i + 1 < eps.size(); ++i)
      diff[i] += holder_norm(es[i].Xi2 - es[i + 1].Xi2, 2 * 0.9 - 2.0, tg) / 20;
    for (std::size_t i = 0; i < eps.size(); ++i)
      raw[i] += holder_norm(es[i].Xi2 + es[i].c_eps, 2 * 0.9 - 2.0, tg) / 20;
  }
  for (std::size_t i = 0; i + 1 < diff.size(); ++i) CHECK(diff[i + 1] < diff[i]);
  std::vector<double> le;
  for (double e : eps) le.push_back(std::log(1.0 / e));
  CHECK(least_squares(le, raw).slope > 0.05);
}

TEST_CASE("exponential moments") {
  auto g = Geometry::make(GeometryKind::Torus, 16);
  TimeGrid tg = TimeGrid::make(*g, 64);
  const std::vector<double> h = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  const auto t = exp_moment_probe(g, 100, h, 1.0 / 16, tg, 0.9);
  CHECK(t.rows[0].estimate == 1.0);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].estimate > t.rows[i - 1].estimate);
  CHECK(t.largest_stable_h >= 0.0);
  CHECK_THROWS_AS(exp_moment_probe(g, 99, h, 1.0 / 16, tg, 0.9), InvalidArgument);
  CHECK(to_json(t)["rows"].size() == h.size());

  // log-survival of the noise norm is concave
  std::vector<double> v;
  for (std::uint64_t s = 1; s <= 2000; ++s) v.push_back(holder_norm(sample_white(g, s).field(), 0.9 - 2.0, tg));
  CHECK(log_survival_curvature(v) < 0.0);
  // a Gumbel-like sample is concave by construction, an exponential one is linear
  std::mt19937_64 gen(3);
  std::extreme_value_distribution<double> gum(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> gv, ev;
  for (int i = 0; i < 20000; ++i) {
    gv.push_back(gum(gen));
    ev.push_back(ex(gen));
  }
  CHECK(log_survival_curvature(gv) < -0.1);
  CHECK(std::abs(log_survival_curvature(ev)) < 0.05);
}

TEST_CASE("archive round trip") {
  auto g = Geometry::make(GeometryKind::Torus, 64);
  TimeGrid tg = TimeGrid::make(*g, 64);
  const auto e = enhance(g, 5, 1.0 / 64, tg, 0.9);
  const std::string path = "heatpara_test_archive.bin";
  archive_write(e, path);
  const auto r = archive_read(path);
  CHECK(archive_bytes(r) == archive_bytes(e));
  CHECK(r.Xi2.coeffs() == e.Xi2.coeffs());
  CHECK(r.x == e.x);
  const auto bytes = archive_bytes(e);
  const double expect = 6.0 * 64 * 64 * 8;
  CHECK(std::abs(bytes.size() / expect - 1.0) < 0.05);

  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  CHECK_THROWS_WITH_AS(archive_parse(bad), doctest::Contains("checksum"), ArchiveError);

  auto other = bytes;
  other[6] = 2;  // version field, checksum recomputed
  const auto crc = static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), other.data(), other.size() - 4));
  for (int i = 0; i < 4; ++i) other[other.size() - 4 + i] = static_cast<unsigned char>(crc >> (8 * i));
  CHECK_THROWS_WITH_AS(archive_parse(other), doctest::Contains("version"), ArchiveError);
  CHECK_THROWS_AS(archive_read("does_not_exist.bin"), ArchiveError);

  auto sq = Geometry::make(GeometryKind::DirichletSquare, 16);
  const auto es = enhance(sq, 5, 1.0 / 16, TimeGrid::make(*sq, 64), 0.9);
  CHECK(archive_bytes(archive_parse(archive_bytes(es))) == archive_bytes(es));
  CHECK(archive_parse(archive_bytes(es)).plain_product);
  std::remove(path.c_str());
}
