#include <doctest.h>

#include "polycond/experiments.hpp"

#include <cmath>

using namespace polycond;

namespace {
const std::string kCache = "test-net-cache";

TailOptions fast_opts() {
  TailOptions o;
  o.net_cache_dir = kCache;
  return o;
}

SystemDispersion disp_of(const SystemSubspace& E) {
  DispersionOptions d;
  d.net_cache_dir = kCache;
  d.sigma_width_rel = 5e-5;
  return dispersion_system(E, 0.005, 40, d);
}

PolynomialSystem center_q3() {
  // fixed well-conditioned center in the full (3, (2,2)) space
  auto p1 = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{2, 0, 0});
  p1.set_coeff(std::vector<int>{0, 2, 0}, 1.0);
  p1.set_coeff(std::vector<int>{0, 0, 2}, -1.0);
  auto p2 = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{1, 1, 0});
  p2.set_coeff(std::vector<int>{0, 1, 1}, 1.0);
  return PolynomialSystem({p1, p2});
}

}  // namespace

TEST_CASE("M formula against independent arithmetic") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  SystemDispersion disp = disp_of(E);
  BoundConfig bounds;
  const double K = std::sqrt(2.0), c0 = std::sqrt(2.0 / M_PI);
  MValue M = compute_M_average(E, K, c0, bounds, disp);
  CHECK_FALSE(M.infinite);
  // independent evaluation of the printed formula (sigma = 1 for full spaces)
  const double led = 1.0 + std::log(2.0);
  const double expect = 3.0 * K * std::sqrt(12.0) * std::pow(c0 * 4.0 * K * 4.0 * led, 4.0);
  CHECK(M.value == doctest::Approx(expect).epsilon(1e-3));
  CHECK(M.value == doctest::Approx(1.2832e7).epsilon(2e-3));

  // doubling sigma multiplies by 2^{2n-2} exactly
  SystemDispersion doubled = disp;
  doubled.sigma.hi *= 2.0;
  MValue M2 = compute_M_average(E, K, c0, bounds, doubled);
  CHECK(M2.value == doctest::Approx(M.value * 16.0).epsilon(1e-12));

  // d = 1 edge: log(e) = 1
  SystemSubspace E1 = SystemSubspace::full(3, {1, 1});
  SystemDispersion disp1 = disp_of(E1);
  MValue M1 = compute_M_average(E1, K, c0, bounds, disp1);
  const double expect1 = 3.0 * K * std::sqrt(6.0) * std::pow(c0 * 4.0 * K * disp1.sigma.hi, 4.0);
  CHECK(M1.value == doctest::Approx(expect1).epsilon(1e-9));

  BoundConfig bad;
  bad.C = 2.0;
  CHECK_THROWS_AS(compute_M_average(E, K, c0, bad, disp), std::invalid_argument);
}

TEST_CASE("smoothed M reduces, grows, and the remark variant is smaller") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  SystemDispersion disp = disp_of(E);
  BoundConfig bounds;
  const double K = std::sqrt(2.0), c0 = std::sqrt(2.0 / M_PI);
  std::vector<HomogeneousPolynomial> zq{HomogeneousPolynomial(3, 2), HomogeneousPolynomial(3, 2)};
  PolynomialSystem Q0(std::move(zq));
  MValue base = compute_M_average(E, K, c0, bounds, disp);
  MValue m0 = compute_M_smoothed(E, Q0, K, c0, bounds, disp, SmoothedVariant::statement,
                                 Interval{0.0, 0.0});
  CHECK(m0.value == doctest::Approx(base.value));

  PolynomialSystem Q = center_q3();
  SphereNet net = build_net(3, 0.05, 12001, kCache);
  Interval qs = sup_norm_bound(Q, net);
  MValue m1 = compute_M_smoothed(E, Q, K, c0, bounds, disp, SmoothedVariant::statement, qs);
  CHECK(m1.value > base.value);
  MValue m10 = compute_M_smoothed(E, scale_system(Q, 10.0), K, c0, bounds, disp,
                                  SmoothedVariant::statement,
                                  Interval{10.0 * qs.lo, 10.0 * qs.hi});
  CHECK(m10.value > m1.value);

  // the remark form wins for flat centers, whose sup norm is small next to
  // their Bombieri-Weyl norm
  auto r1 = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{2, 0, 0}, 10.0);
  r1.set_coeff(std::vector<int>{0, 2, 0}, 10.0);
  r1.set_coeff(std::vector<int>{0, 0, 2}, 10.0);
  PolynomialSystem Qflat({r1, r1});
  Interval qfs = sup_norm_bound(Qflat, net);
  MValue stmt = compute_M_smoothed(E, Qflat, K, c0, bounds, disp, SmoothedVariant::statement, qfs);
  MValue rem = compute_M_smoothed(E, Qflat, K, c0, bounds, disp, SmoothedVariant::remark, qfs);
  CHECK(rem.value < stmt.value);
}

TEST_CASE("tail bound branches") {
  CHECK(kappa_tail_bound(4.0, 3, 2) == doctest::Approx(1.5));
  CHECK(kappa_tail_bound(100.0, 3, 2) == doctest::Approx(0.3));
  CHECK_THROWS_AS(kappa_tail_bound(0.5, 3, 2), std::invalid_argument);
  // large-t branch kicks in above e^{2 n log(ed)}
  const double cutoff = std::exp(2.0 * 3.0 * log_ed(2));
  const double just_above = cutoff * 4.0;
  const double expected = (std::exp(2.0) + 1.0) / std::sqrt(just_above) *
                          std::pow(std::log(just_above) / (6.0 * log_ed(2)), 1.5);
  CHECK(kappa_tail_bound(just_above, 3, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("wilson interval sanity") {
  WilsonCI ci = wilson_ci(0, 100);
  CHECK(ci.lo == 0.0);
  CHECK(ci.hi > 0.0);
  CHECK(ci.hi < 0.05);
  WilsonCI mid = wilson_ci(50, 100);
  CHECK(mid.lo < 0.5);
  CHECK(mid.hi > 0.5);
  CHECK(mid.hi - mid.lo < 0.22);
  CHECK_THROWS_AS(wilson_ci(1, 0), std::invalid_argument);
}

TEST_CASE("small tail experiment passes and reproduces bit-exactly") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  TailOptions opts = fast_opts();
  BoundConfig bounds;
  TailResult a = run_tail_experiment(E, RandomModel::gaussian(), 120, {4.0, 25.0}, bounds,
                                     20240810ULL, opts);
  CHECK(a.rows.size() == 2);
  for (const auto& row : a.rows) {
    CHECK(row.pass);
    CHECK(row.ambiguous == 0);
  }
  CHECK_FALSE(a.inconclusive);
  CHECK(a.expectation_pass);
  CHECK(a.mean_log_kappa_lo <= a.elog_bound);
  // aux rows at these t are all-zero exceedance
  for (const auto& row : a.wnorm_rows) CHECK(row.exceed == 0);

  TailResult b = run_tail_experiment(E, RandomModel::gaussian(), 120, {4.0, 25.0}, bounds,
                                     20240810ULL, opts);
  CHECK(a.report.csv() == b.report.csv());

  CHECK_THROWS_AS(
      run_tail_experiment(E, RandomModel::gaussian(), 50, {4.0}, bounds, 1, opts),
      std::invalid_argument);
  CHECK_THROWS_AS(
      run_tail_experiment(E, RandomModel::gaussian(), 120, {0.5}, bounds, 1, opts),
      std::invalid_argument);
}

TEST_CASE("smoothed tail with zero center matches the plain tail") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  TailOptions opts = fast_opts();
  BoundConfig bounds;
  std::vector<HomogeneousPolynomial> zq{HomogeneousPolynomial(3, 2), HomogeneousPolynomial(3, 2)};
  PolynomialSystem Q0(std::move(zq));
  TailResult plain = run_tail_experiment(E, RandomModel::gaussian(), 100, {4.0}, bounds, 77ULL, opts);
  TailResult sm = run_smoothed_tail_experiment(E, Q0, RandomModel::gaussian(), 100, {4.0},
                                               SmoothedMode::additive, 0.0,
                                               SmoothedVariant::statement, bounds, 77ULL, opts);
  CHECK(sm.M == doctest::Approx(plain.M));
  CHECK(sm.rows[0].exceed == plain.rows[0].exceed);
  CHECK(sm.rows[0].ambiguous == plain.rows[0].ambiguous);

  // lp_ball carries no documented density bound
  CHECK_THROWS_AS(
      run_smoothed_tail_experiment(E, Q0, RandomModel::lp_ball(2.0), 100, {4.0},
                                   SmoothedMode::additive, 0.0, SmoothedVariant::statement,
                                   bounds, 1ULL, opts),
      std::invalid_argument);
}

TEST_CASE("norm tail rows carry both variants") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  NormTailResult r = run_norm_tail(E, RandomModel::gaussian(), 2000, {1.1, 1.3}, 5150ULL);
  CHECK(r.rows.size() == 2);
  CHECK(r.scaled_rows.size() == 2);
  // the stated bound fails at small t for genuine gaussians; the K-scaled
  // variant holds
  CHECK_FALSE(r.rows[0].pass);
  CHECK(r.scaled_rows[0].pass);
  CHECK(r.scaled_rows[1].pass);
}

TEST_CASE("approximant search on an easy instance") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  PolynomialSystem Q = center_q3();
  BoundConfig bounds;
  TailOptions opts = fast_opts();
  ApproxResult r = find_wellconditioned(Q, E, 0.9, 20, bounds, 31337ULL, opts);
  CHECK(r.found);
  CHECK(r.joint_success_rate >= 0.4);
  CHECK(r.distance_success_rate >= 0.8);
  CHECK(r.best.has_value());
  CHECK_THROWS_AS(find_wellconditioned(Q, E, 1.5, 5, bounds, 1ULL, opts), std::invalid_argument);
}

TEST_CASE("gamma estimate matches the chi mean at degree one") {
  GammaEstimate g2 = estimate_veronese_complexity(2, 1, 500, 99ULL, 0.0, kCache);
  CHECK(g2.estimate == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(0.05));
  CHECK(g2.ci_lo <= g2.estimate);
  CHECK(g2.ci_hi >= g2.estimate);
  CHECK_THROWS_AS(estimate_veronese_complexity(2, 1, 10, 1ULL, 0.0, kCache),
                  std::invalid_argument);
}

TEST_CASE("grassmann experiment recovers the full space") {
  GrassmannResult r = run_grassmann_dispersion(3, 4, {15}, 5, 123ULL, 1.0, 1.0, fast_opts());
  CHECK(r.rows.size() == 1);
  CHECK(r.rows[0].median == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(r.rows[0].finite_fraction == 1.0);
  CHECK_THROWS_AS(run_grassmann_dispersion(3, 4, {16}, 5, 1ULL, 1.0, 1.0, fast_opts()),
                  std::invalid_argument);
}

TEST_CASE("csv layout is stable") {
  ExperimentReport rep;
  rep.name = "demo";
  rep.seed = 5;
  rep.config = {{"alpha", "1"}};
  rep.columns = {"a", "b"};
  rep.rows = {{"1", "2"}, {"3", "4"}};
  std::string csv = rep.csv();
  CHECK(csv.find("# name = demo") != std::string::npos);
  CHECK(csv.find("a,b\n1,2\n3,4\n") != std::string::npos);
  CHECK(rep.json().find("\"seed\": 5") != std::string::npos);
}
