#include <doctest.h>

#include "polycond/random.hpp"

#include <algorithm>
#include <cmath>

using namespace polycond;

namespace {
const std::string kCache = "test-net-cache";
}

TEST_CASE("model registry constants") {
  RandomModel g = RandomModel::gaussian();
  CHECK(g.K == doctest::Approx(std::sqrt(2.0)));
  CHECK(g.c0 == doctest::Approx(std::sqrt(2.0 / M_PI)));
  CHECK(g.K * g.c0 >= 0.25);
  CHECK(g.has_density_bound);

  RandomModel e4 = RandomModel::exp_power(4.0);
  CHECK(e4.K * e4.c0 >= 0.25);
  // p = 2 reduces to the gaussian constants
  RandomModel e2 = RandomModel::exp_power(2.0);
  CHECK(e2.K == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(e2.c0 == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));

  CHECK_THROWS_AS(RandomModel::exp_power(1.5), std::invalid_argument);
  CHECK_THROWS_AS(RandomModel::lp_ball(1.0), std::invalid_argument);
  CHECK_THROWS_AS(RandomModel::parse("gaussian", 0.1, 0.1), std::invalid_argument);  // K c0 < 1/4

  RandomModel parsed = RandomModel::parse("lp_ball:3");
  CHECK(parsed.family == Family::lp_ball);
  CHECK(parsed.p == doctest::Approx(3.0));
  CHECK_FALSE(parsed.has_density_bound);
  RandomModel with_bound = RandomModel::parse("lp_ball:3", 0.0, 1.5);
  CHECK(with_bound.has_density_bound);

  RandomModel scaled = g.scaled_to_K(1.0);
  CHECK(scaled.K == doctest::Approx(1.0));
  CHECK(scaled.K * scaled.c0 == doctest::Approx(g.K * g.c0));
  CHECK(scaled.scale == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("seed discipline is exact and streams are distinct") {
  SeedPlan plan{987654321ULL};
  RngStream a = plan.stream(3);
  RngStream b = plan.stream(3);
  RngStream c = plan.stream(4);
  VectorXd va = sample_coeffs(RandomModel::gaussian(), 16, a);
  VectorXd vb = sample_coeffs(RandomModel::gaussian(), 16, b);
  VectorXd vc = sample_coeffs(RandomModel::gaussian(), 16, c);
  CHECK((va - vb).norm() == 0.0);
  CHECK((va - vc).norm() > 0.0);
}

TEST_CASE("centering within CLT bands") {
  SeedPlan plan{20240901ULL};
  const int dim = 10000;
  int family_idx = 0;
  for (const auto& model : {RandomModel::gaussian(), RandomModel::exp_power(4.0),
                            RandomModel::lp_ball(2.0)}) {
    RngStream rng = plan.stream(100 + family_idx++);
    const int reps = 400;
    VectorXd mean = VectorXd::Zero(8);
    for (int r = 0; r < reps; ++r) {
      VectorXd x = sample_coeffs(model, dim, rng);
      mean += x.head(8);
    }
    mean /= reps;
    // per-coordinate std is at most ~1/sqrt(dim * reps) after averaging
    for (int j = 0; j < 8; ++j) CHECK(std::abs(mean[j]) < 4.0 / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("unit variance across families") {
  SeedPlan plan{5150ULL};
  const int dim = 10000;
  {
    RngStream rng = plan.stream(0);
    VectorXd x = sample_coeffs(RandomModel::exp_power(4.0), dim, rng);
    CHECK(x.squaredNorm() / dim == doctest::Approx(1.0).epsilon(0.05));
  }
  {
    RngStream rng = plan.stream(1);
    VectorXd x = sample_coeffs(RandomModel::gaussian(), dim, rng);
    CHECK(x.squaredNorm() / dim == doctest::Approx(1.0).epsilon(0.05));
  }
  {
    // lp_ball coordinates are dependent; average over draws instead
    double s = 0.0;
    long count = 0;
    for (int r = 0; r < 200; ++r) {
      RngStream rng = plan.stream(1000 + r);
      VectorXd x = sample_coeffs(RandomModel::lp_ball(2.0), 50, rng);
      s += x.squaredNorm();
      count += 50;
    }
    CHECK(s / count == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("sub-gaussian tail domination") {
  SeedPlan plan{777ULL};
  const int dim = 8;
  const long reps = 20000;
  int model_idx = 0;
  for (const auto& model : {RandomModel::gaussian(), RandomModel::exp_power(4.0)}) {
    for (int dir = 0; dir < 3; ++dir) {
      RngStream dir_rng = plan.stream(900 + dir, model_idx);
      VectorXd theta(dim);
      for (int j = 0; j < dim; ++j) theta[j] = dir_rng.normal();
      theta.normalize();
      std::vector<long> counts(3, 0);
      RngStream rng = plan.stream(10 + dir, model_idx);
      for (long r = 0; r < reps; ++r) {
        VectorXd x = sample_coeffs(model, dim, rng);
        double t = std::abs(theta.dot(x));
        for (int ti = 0; ti < 3; ++ti)
          if (t >= ti + 1.0) ++counts[ti];
      }
      for (int ti = 0; ti < 3; ++ti) {
        double t = ti + 1.0;
        double bound = 2.0 * std::exp(-t * t / (model.K * model.K));
        double p_hat = static_cast<double>(counts[ti]) / reps;
        double slack = 3.0 * std::sqrt(std::max(p_hat, 1e-4) / reps);
        CHECK(p_hat <= bound + slack);
      }
    }
    ++model_idx;
  }
}

TEST_CASE("small-ball domination") {
  SeedPlan plan{424242ULL};
  const int dim = 8;
  const long reps = 20000;
  int model_idx = 0;
  for (const auto& model : {RandomModel::gaussian(), RandomModel::exp_power(4.0)}) {
    for (int dir = 0; dir < 3; ++dir) {
      RngStream dir_rng = plan.stream(900 + dir, model_idx);
      VectorXd a(dim);
      for (int j = 0; j < dim; ++j) a[j] = dir_rng.normal();
      const double an = a.norm();
      std::vector<double> eps{0.05, 0.1, 0.2};
      std::vector<long> counts(eps.size(), 0);
      RngStream rng = plan.stream(50 + dir, model_idx);
      for (long r = 0; r < reps; ++r) {
        VectorXd x = sample_coeffs(model, dim, rng);
        double t = std::abs(a.dot(x));
        for (std::size_t ei = 0; ei < eps.size(); ++ei)
          if (t <= eps[ei] * an) ++counts[ei];
      }
      for (std::size_t ei = 0; ei < eps.size(); ++ei) {
        double p_hat = static_cast<double>(counts[ei]) / reps;
        double slack = 3.0 * std::sqrt(std::max(p_hat, 1e-4) / reps);
        CHECK(p_hat <= model.c0 * eps[ei] + slack);
      }
    }
    ++model_idx;
  }
}

TEST_CASE("sample_system respects the factor structure") {
  SystemSubspace E = SystemSubspace::full(3, {2, 2});
  SeedPlan plan{31415ULL};
  RngStream r1 = plan.stream(0);
  PolynomialSystem P1 = sample_system(E, RandomModel::gaussian(), r1);
  RngStream r2 = plan.stream(0);
  PolynomialSystem P2 = sample_system(E, RandomModel::gaussian(), r2);
  RngStream r3 = plan.stream(1);
  PolynomialSystem P3 = sample_system(E, RandomModel::gaussian(), r3);
  for (int i = 0; i < 2; ++i) {
    CHECK((P1.poly(i).coeffs() - P2.poly(i).coeffs()).norm() == 0.0);
    CHECK((P1.poly(i).coeffs() - P3.poly(i).coeffs()).norm() > 0.0);
  }

  // single-factor system reduces to sample_coeffs through the basis
  std::vector<PolySubspace> fs;
  fs.push_back(make_named_space(SpaceKind::power_monomials, 2, 3));
  SystemSubspace E1(std::move(fs));
  RngStream ra = plan.stream(9);
  PolynomialSystem PA = sample_system(E1, RandomModel::gaussian(), ra);
  RngStream rb = plan.stream(9);
  VectorXd c = sample_coeffs(RandomModel::gaussian(), 2, rb);
  auto expect = HomogeneousPolynomial::from_bw_coords(
      2, 3, E1.factor(0).coords().transpose() * c);
  CHECK((PA.poly(0).coeffs() - expect.coeffs()).norm() == 0.0);
}

TEST_CASE("sample_smoothed modes") {
  SystemSubspace E = SystemSubspace::full(2, {2});
  auto q = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0}, 2.0);
  PolynomialSystem Q({q});
  SeedPlan plan{999ULL};

  // delta = 0 returns Q exactly
  RngStream r0 = plan.stream(0);
  PolynomialSystem P0 = sample_smoothed(Q, E, RandomModel::gaussian(), SmoothedMode::delta_scaled,
                                        0.0, r0);
  CHECK((P0.poly(0).coeffs() - Q.poly(0).coeffs()).norm() == 0.0);

  // ||P - Q||_W = delta ||Q||_W ||G||_W by construction
  const double delta = 0.25;
  RngStream r1 = plan.stream(1);
  PolynomialSystem P1 = sample_smoothed(Q, E, RandomModel::gaussian(), SmoothedMode::delta_scaled,
                                        delta, r1);
  RngStream r2 = plan.stream(1);
  PolynomialSystem G = sample_system(E, RandomModel::gaussian(), r2);
  auto diff = P1.poly(0);
  auto negq = Q.poly(0);
  negq *= -1.0;
  diff += negq;
  CHECK(bw_norm(diff) == doctest::Approx(delta * bw_norm_system(Q) * bw_norm_system(G)));

  // Q outside span(E) is rejected
  std::vector<PolySubspace> fs;
  fs.push_back(make_named_space(SpaceKind::power_monomials, 2, 2));
  SystemSubspace Epow(std::move(fs));
  auto qq = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{1, 1}, 1.0);
  PolynomialSystem Qout({qq});
  RngStream r3 = plan.stream(2);
  CHECK_THROWS_AS(
      sample_smoothed(Qout, Epow, RandomModel::gaussian(), SmoothedMode::additive, 0.0, r3),
      std::invalid_argument);
}

TEST_CASE("haar subspaces have projector structure") {
  SeedPlan plan{2718ULL};
  RngStream rng = plan.stream(0);
  PolySubspace F = sample_haar_subspace(10, 3, 4, rng);
  CHECK(F.dim() == 10);
  CHECK(F.ambient_dim() == 15);
  MatrixXd proj = F.coords().transpose() * F.coords();
  CHECK((proj - proj.transpose()).norm() < 1e-10);
  CHECK((proj * proj - proj).norm() < 1e-10);

  // m = dim H_d gives the full space
  RngStream rng2 = plan.stream(1);
  PolySubspace full = sample_haar_subspace(15, 3, 4, rng2);
  MatrixXd p2 = full.coords().transpose() * full.coords();
  CHECK((p2 - MatrixXd::Identity(15, 15)).norm() < 1e-10);
}

TEST_CASE("haar sigma distribution is mixing invariant") {
  // two-sample Kolmogorov-Smirnov on sigma_hi with and without a fixed
  // orthogonal re-mixing of the ambient coordinates
  SeedPlan plan{112233ULL};
  const int reps = 200;
  const int m = 5, n = 3, d = 3;
  const int N = static_cast<int>(hd_dimension(n, d));
  RngStream mix_rng = plan.stream(9999);
  MatrixXd g(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) g(i, j) = mix_rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd rot = qr.householderQ();

  DispersionOptions o;
  o.net_cache_dir = kCache;
  o.sigma_width_rel = 5e-3;
  std::vector<double> plain, mixed;
  for (int r = 0; r < reps; ++r) {
    RngStream ra = plan.stream(r, 0);
    PolySubspace F = sample_haar_subspace(m, n, d, ra);
    plain.push_back(dispersion(F, 0.02, 30, o).sigma_hi);
    RngStream rb = plan.stream(r, 1);
    PolySubspace G0 = sample_haar_subspace(m, n, d, rb);
    PolySubspace G(n, d, G0.coords() * rot.transpose(), false);
    mixed.push_back(dispersion(G, 0.02, 30, o).sigma_hi);
  }
  std::sort(plain.begin(), plain.end());
  std::sort(mixed.begin(), mixed.end());
  // two-sample KS statistic
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < plain.size() && j < mixed.size()) {
    if (plain[i] <= mixed[j]) ++i;
    else ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) / plain.size() -
                               static_cast<double>(j) / mixed.size()));
  }
  // asymptotic critical value at level 0.01 for 200 vs 200
  const double crit = 1.628 * std::sqrt(2.0 / reps);
  CHECK(ks < crit);
}
