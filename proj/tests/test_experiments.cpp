#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "heatpara/config.hpp"

using namespace heatpara;

namespace {

constexpr double kPi = 3.14159265358979323846;

StudyConfig small(int N, double eps) {
  StudyConfig c;
  c.N = N;
  c.n_t = 64;
  c.eps = {eps};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("study config validation") {
  StudyConfig c;
  CHECK_NOTHROW(c.validate());
  c.eps = {1.0 / 16, 1.0 / 8};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.eps = {1.0 / 8};
  c.seeds = {1, 2, 1};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.seeds = {1};
  c.alpha = 0.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("Weyl law at zero noise") {
  StudyConfig c = small(32, 1.0 / 32);
  c.zero_noise = true;
  const auto t = weyl_study(c);
  CHECK(t.passed());
  CHECK(std::abs(t.data["pooled_slope"].get<double>() / kPi - 1.0) < 0.05);
  c.geometry = GeometryKind::DirichletSquare;
  const auto s = weyl_study(c);
  CHECK(s.passed());
  CHECK(std::abs(s.data["pooled_slope"].get<double>() / (kPi / 4) - 1.0) < 0.05);
  CHECK_THROWS_AS(weyl_study(c, 50.0, 0.9 * c.make_geometry()->lambda_max()), InvalidArgument);
  CHECK_THROWS_AS(weyl_study(c, 0.0, 100.0), InvalidArgument);
  c.N = 64;
  CHECK_THROWS_AS(weyl_study(c), InvalidArgument);
}

TEST_CASE("noisy Weyl slope") {
  StudyConfig c = small(32, 1.0 / 64);
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto r = weyl_study(c);
  CHECK(r.passed());
  CHECK(r.data["slopes"].size() == 10);
}

TEST_CASE("eigenvalue bounds at zero noise") {
  StudyConfig c = small(16, 1.0 / 16);
  c.zero_noise = true;
  const auto r = eigenvalue_bounds_study(c, 20);
  CHECK(r.passed());
  CHECK(r.data["violations"] == 0);
  CHECK(r.data["seeds"][0]["C_prime"].get<double>() == doctest::Approx(1.0));
  CHECK(r.rows.size() == 20);
}

TEST_CASE("tail study") {
  StudyConfig c = small(8, 1.0 / 8);
  const auto r = tail_study(c, 1, {}, 500);
  CHECK(r.find("cdf_monotone")->passed);
  CHECK(r.find("half_sample_within_dkw")->passed);
  CHECK(r.find("left_tail_stretched_exponential")->passed);
  CHECK(r.find("right_tail_stretched_exponential")->passed);
  CHECK(r.data["median"].get<double>() < 0.0);
  CHECK_THROWS_AS(tail_study(c, 1, {}, 200), InvalidArgument);
  const auto g = tail_study(c, 2, {-1.0, 0.0, 0.5, 1.0, 2.0}, 100);
  CHECK(g.rows.size() == 5);
}

TEST_CASE("resolvent study bookkeeping") {
  StudyConfig c = small(16, 1.0 / 4);
  c.eps = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.seeds = {1, 2};
  const auto r = resolvent_convergence_study(c, 5);
  for (const auto& row : r.rows)
    if (row[1] == c.eps.back()) {
      CHECK(row[2] == 0.0);
      CHECK(row[3] == 0.0);
      CHECK(row[4] == 0.0);
    }
  CHECK(r.data["unrenormalized_drift_slope"].get<double>() < 0.0);
  c.eps = {1.0 / 4, 1.0 / 8, 1.0 / 16};
  CHECK_THROWS_AS(resolvent_convergence_study(c), InvalidArgument);
}

TEST_CASE("Brezis-Gallouet check") {
  StudyConfig c = small(32, 1.0 / 32);
  const auto r = brezis_gallouet_check(c);
  CHECK(r.passed());
  CHECK(r.data["zero"][0] == 0.0);
  c.geometry = GeometryKind::DirichletSquare;
  CHECK_THROWS_AS(brezis_gallouet_check(c), GeometryLimitation);
}

TEST_CASE("NLS splitting") {
  StudyConfig c = small(16, 1.0 / 4);
  c.eps = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.seeds = {1, 2, 3};
  NlsOptions o;
  o.dt = 1e-2;
  const auto r = nls_study(c, o);
  CHECK(r.find("mass_drift")->passed);
  CHECK(r.find("free_phase_rotation")->passed);
  CHECK(r.find("cauchy_in_eps")->passed);
  auto g = c.make_geometry();
  o.dt = 1.0;
  CHECK_THROWS_AS(NlsSolver(Field(g), 1.0, o), InvalidArgument);
  o.dt = 1e-2;
  CHECK_THROWS_AS(NlsSolver(Field(g), -1.0, o), InvalidArgument);
  // linear flow conserves the quadratic energy
  o.nonlinear = false;
  NlsSolver lin(Field(g), 1.0, o);
  const CVector u0 = to_complex(random_band_limited(g, 3, 1), random_band_limited(g, 3, 2));
  const auto tr = lin.evolve(u0);
  const double e0 = 0.5 * u0.dot(lin.apply_Hplus(u0)).real();
  const CVector uT = Eigen::Map<const CVector>(tr.final_state.data(), static_cast<Eigen::Index>(tr.final_state.size()));
  CHECK(std::abs(0.5 * uT.dot(lin.apply_Hplus(uT)).real() - e0) < 1e-9 * e0);
  CHECK((lin.solve_Hplus(lin.apply_Hplus(u0)) - u0).norm() < 1e-12 * u0.norm());
}

TEST_CASE("reports are deterministic") {
  StudyConfig c = small(16, 1.0 / 16);
  c.seeds = {3, 4, 5};
  const auto a = weyl_study(c, 10.0, 40.0), b = weyl_study(c, 10.0, 40.0);
  c.threads = 1;
  const auto d = weyl_study(c, 10.0, 40.0);
  CHECK(to_json(a, "abc").dump() == to_json(b, "abc").dump());
  CHECK(to_json(a, "abc").dump() == to_json(d, "abc").dump());
  CHECK(to_csv(a) == to_csv(d));
  const auto dir = std::filesystem::temp_directory_path() / "heatpara_report_test";
  std::filesystem::remove_all(dir);
  write_report(a, dir.string(), "00c0ffee");
  const std::string js = slurp(dir / "weyl.json");
  CHECK(js.find("00c0ffee") != std::string::npos);
  CHECK(json::parse(js)["study"] == "weyl");
  CHECK(slurp(dir / "weyl.csv").find("lambda,N_seed3") != std::string::npos);
}

TEST_CASE("config documents") {
  Config c = Config::parse("# comment\nN = 16\neps = 1/8, 1/16 # trailing\nseeds = 1-3,7\n");
  const StudyConfig s = c.study();
  CHECK(s.N == 16);
  CHECK(s.eps.size() == 2);
  CHECK(s.eps[1] == doctest::Approx(1.0 / 16));
  CHECK(s.seeds == std::vector<std::uint64_t>{1, 2, 3, 7});
  CHECK_FALSE(s.calibrated);
  CHECK_THROWS_AS(Config::parse("bogus = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("N 16\n"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("N = sixteen\n").study(), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("calibration.k = 2\n").study(), InvalidArgument);
  const StudyConfig cal = Config::parse("calibration.k = 2\ncalibration.m = 0.5\n").study();
  CHECK(cal.calibrated);
  CHECK(cal.cal.m == 0.5);
  Config d;
  CHECK(d.hash() == Config().hash());
  CHECK(d.hash().size() == 8);
  d.set("N", "16");
  CHECK(d.hash() != Config().hash());
  for (const auto& k : config_keys()) CHECK(!k.doc.empty());
}

TEST_CASE("selftest") {
  const auto r = selftest(StudyConfig{});
  CHECK(r.passed());
  CHECK(r.checks.size() >= 10);
}
