#include <doctest.h>

#include "polycond/poly.hpp"
#include "polycond/rng.hpp"
#include "polycond/subspace.hpp"

#include <cmath>
#include <vector>

using namespace polycond;

namespace {

HomogeneousPolynomial random_poly(int n, int d, RngStream& rng) {
  auto basis = MonomialBasis::get(n, d);
  VectorXd y(basis->dim());
  for (int i = 0; i < y.size(); ++i) y[i] = rng.normal();
  return HomogeneousPolynomial::from_bw_coords(n, d, y);
}

MatrixXd random_orthogonal(int n, RngStream& rng) {
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

TEST_CASE("multinomial exact values") {
  CHECK(multinomial(2, std::vector<int>{1, 1}) == 2);
  CHECK(multinomial(3, std::vector<int>{3, 0}) == 1);
  CHECK(multinomial(4, std::vector<int>{2, 1, 1}) == 12);
  CHECK(multinomial(60, std::vector<int>{30, 30}) == 118264581564861424ULL);
  CHECK_THROWS_AS(multinomial(3, std::vector<int>{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(multinomial(61, std::vector<int>{61}), std::invalid_argument);
  // exact value needs ~87 bits; the weight path falls back to log space
  CHECK_THROWS_AS(multinomial(60, std::vector<int>{12, 12, 12, 12, 12}), std::overflow_error);
  const double w = multinomial_weight(60, std::vector<int>{12, 12, 12, 12, 12});
  CHECK(w == doctest::Approx(std::exp(log_multinomial(60, std::vector<int>{12, 12, 12, 12, 12})))
                 .epsilon(1e-12));
}

TEST_CASE("hd dimension and canonical order") {
  CHECK(hd_dimension(2, 3) == 4);
  CHECK(hd_dimension(3, 2) == 6);
  CHECK(hd_dimension(4, 5) == 56);
  auto basis = MonomialBasis::get(3, 2);
  // first variable's exponent decreases first
  CHECK(basis->exponents()(0, 0) == 2);
  CHECK(basis->exponents()(1, 0) == 1);
  CHECK(basis->exponents()(1, 1) == 1);
  CHECK(basis->exponents()(5, 2) == 2);
}

TEST_CASE("bw_inner on weighted monomials") {
  auto x1sq = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0});
  auto x1x2 = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{1, 1});
  auto x2sq = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{0, 2});
  CHECK(bw_inner(x1sq, x1sq) == doctest::Approx(1.0));
  CHECK(bw_inner(x1x2, x1x2) == doctest::Approx(0.5));
  CHECK(bw_inner(x1sq, x2sq) == doctest::Approx(0.0));
  auto q = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{2, 0, 0});
  CHECK_THROWS_AS(bw_inner(x1sq, q), std::invalid_argument);
}

TEST_CASE("bw_norm_system sum rule") {
  auto x1sq = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0});
  auto x1x2 = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{1, 1});
  PolynomialSystem p1({x1sq});
  CHECK(bw_norm_system(p1) == doctest::Approx(1.0));
  PolynomialSystem p2({x1x2});
  CHECK(bw_norm_system(p2) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // n=3 system holding both polynomials
  auto a = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{2, 0, 0});
  auto b = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{1, 1, 0});
  PolynomialSystem p3({a, b});
  CHECK(bw_norm_system(p3) == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("evaluation and homogeneity") {
  auto p = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0});
  p.set_coeff(std::vector<int>{0, 2}, 1.0);  // x1^2 + x2^2
  PolynomialSystem P({p});
  VectorXd x(2);
  x << 1.0, 0.0;
  CHECK(evaluate_system(P, x)[0] == doctest::Approx(1.0));

  auto q = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{1, 1});
  PolynomialSystem Q({q});
  x << 3.0, 2.0;
  CHECK(evaluate_system(Q, x)[0] == doctest::Approx(6.0));
  CHECK(evaluate_system(Q, VectorXd::Zero(2))[0] == doctest::Approx(0.0));

  RngStream rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    auto f = random_poly(3, 4, rng);
    VectorXd y(3);
    for (int j = 0; j < 3; ++j) y[j] = rng.normal();
    const double lam = 0.7;
    CHECK(f.evaluate(lam * y) == doctest::Approx(std::pow(lam, 4) * f.evaluate(y)).epsilon(1e-10));
  }
}

TEST_CASE("jacobian entries and Euler identity") {
  auto p = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{1, 1});
  PolynomialSystem P({p});
  VectorXd x(2);
  x << 2.5, -1.5;
  MatrixXd j = jacobian(P, x);
  CHECK(j(0, 0) == doctest::Approx(-1.5));
  CHECK(j(0, 1) == doctest::Approx(2.5));

  auto p2 = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0}, 1.0);
  PolynomialSystem P2({p2});
  x << 1.0, 0.0;
  MatrixXd j2 = jacobian(P2, x);
  CHECK(j2(0, 0) == doctest::Approx(2.0));
  CHECK(j2(0, 1) == doctest::Approx(0.0));

  // frozen by hand: p = x1^3 + x1 x2^2 at (1,2): J x = 3 p(x) = 15
  auto p3 = HomogeneousPolynomial::monomial(2, 3, std::vector<int>{3, 0});
  p3.set_coeff(std::vector<int>{1, 2}, 1.0);
  PolynomialSystem P3({p3});
  x << 1.0, 2.0;
  CHECK((jacobian(P3, x) * x)(0) == doctest::Approx(15.0));
  CHECK(3.0 * evaluate_system(P3, x)(0) == doctest::Approx(15.0));

  RngStream rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 2 + static_cast<int>(rng.next_u64() % 3);
    int d = 1 + static_cast<int>(rng.next_u64() % 4);
    std::vector<HomogeneousPolynomial> polys;
    for (int i = 0; i < n - 1; ++i) polys.push_back(random_poly(n, d, rng));
    PolynomialSystem P4(std::move(polys));
    VectorXd y(n);
    for (int j3 = 0; j3 < n; ++j3) y[j3] = rng.normal();
    y.normalize();
    VectorXd euler = jacobian(P4, y) * y;
    VectorXd vals = evaluate_system(P4, y);
    for (int i = 0; i < n - 1; ++i)
      CHECK(euler[i] == doctest::Approx(d * vals[i]).epsilon(1e-10));
  }
}

TEST_CASE("hessian against Euler and finite differences") {
  RngStream rng(11);
  auto f = random_poly(3, 4, rng);
  VectorXd x(3);
  x << 0.3, -0.8, 0.52;
  x.normalize();
  MatrixXd h = f.hessian(x);
  CHECK((h - h.transpose()).norm() == doctest::Approx(0.0));
  // Hess f(x) x = (d-1) grad f(x)
  VectorXd lhs = h * x;
  VectorXd rhs = 3.0 * f.gradient(x);
  CHECK((lhs - rhs).norm() == doctest::Approx(0.0).epsilon(1e-9));
  // finite-difference spot check
  const double eps = 1e-5;
  VectorXd e0 = VectorXd::Zero(3);
  e0[0] = eps;
  double fd = (f.gradient(x + e0)[1] - f.gradient(x - e0)[1]) / (2 * eps);
  CHECK(h(0, 1) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("weighted monomial orthonormality") {
  for (int n : {2, 3}) {
    for (int d : {1, 2, 3, 5}) {
      auto basis = MonomialBasis::get(n, d);
      for (int a = 0; a < basis->dim(); ++a) {
        std::vector<int> alpha(n);
        for (int j = 0; j < n; ++j) alpha[j] = basis->exponents()(a, j);
        auto pa = HomogeneousPolynomial::monomial(n, d, alpha, basis->sqrt_weights()[a]);
        CHECK(bw_norm(pa) == doctest::Approx(1.0).epsilon(1e-12));
        for (int b = a + 1; b < basis->dim(); ++b) {
          std::vector<int> beta(n);
          for (int j = 0; j < n; ++j) beta[j] = basis->exponents()(b, j);
          auto pb = HomogeneousPolynomial::monomial(n, d, beta, basis->sqrt_weights()[b]);
          CHECK(std::abs(bw_inner(pa, pb)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("reproducing property") {
  RngStream rng(5);
  for (int n : {2, 3, 4}) {
    for (int d : {1, 3, 5}) {
      for (int rep = 0; rep < 5; ++rep) {
        auto f = random_poly(n, d, rng);
        VectorXd v(n);
        for (int j = 0; j < n; ++j) v[j] = rng.normal();
        v.normalize();
        auto qv = veronese_vector(n, d, v);
        CHECK(f.evaluate(v) == doctest::Approx(bw_inner(f, qv)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("orthogonal invariance of the Bombieri-Weyl norm") {
  RngStream rng(17);
  for (int n : {2, 3}) {
    for (int d : {2, 3, 5}) {
      auto p = random_poly(n, d, rng);
      MatrixXd r = random_orthogonal(n, rng);
      auto pr = compose_linear(p, r);
      CHECK(std::abs(bw_norm(pr) - bw_norm(p)) <= 1e-9 * bw_norm(p));
      // substitution really is p(Rx)
      VectorXd x(n);
      for (int j = 0; j < n; ++j) x[j] = rng.normal();
      CHECK(pr.evaluate(x) == doctest::Approx(p.evaluate(r * x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("degree scaling") {
  VectorXd s = degree_scaling({2, 3});
  CHECK(s[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(s[1] == doctest::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(degree_scaling({0}), std::invalid_argument);
}

TEST_CASE("system shape invariants") {
  auto p = HomogeneousPolynomial::monomial(3, 2, std::vector<int>{2, 0, 0});
  CHECK_THROWS_AS(PolynomialSystem({p}), std::invalid_argument);  // needs n-1 = 2 polys
  auto q = HomogeneousPolynomial::monomial(2, 2, std::vector<int>{2, 0});
  CHECK_THROWS_AS(PolynomialSystem({p, q}), std::invalid_argument);  // mixed n
}

TEST_CASE("system evaluator matches the reference path") {
  RngStream rng(23);
  std::vector<HomogeneousPolynomial> polys{random_poly(3, 2, rng), random_poly(3, 4, rng)};
  PolynomialSystem P(std::move(polys));
  SystemEvaluator ev(P);
  VectorXd x(3), vals;
  MatrixXd jac;
  for (int rep = 0; rep < 10; ++rep) {
    for (int j = 0; j < 3; ++j) x[j] = rng.normal();
    ev.evaluate(x, vals);
    CHECK((vals - P.evaluate(x)).norm() == doctest::Approx(0.0).epsilon(1e-12));
    ev.jacobian(x, jac);
    CHECK((jac - P.jacobian(x)).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}
