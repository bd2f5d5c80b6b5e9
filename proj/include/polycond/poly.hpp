#pragma once

// Dense homogeneous polynomials over a fixed monomial order, their systems,
// and the Bombieri-Weyl inner product that makes the weighted monomials
// sqrt(binom(d,alpha)) x^alpha an orthonormal basis of H_d.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polycond {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// dim H_d = binom(n+d-1, d)
std::int64_t hd_dimension(int n, int d);

// Exact d!/(alpha_1! ... alpha_k!). Throws std::invalid_argument when
// sum(alpha) != d or d > 60, std::overflow_error when the exact value does
// not fit in 64 bits (callers needing only the weight use multinomial_weight,
// which falls back to log-gamma).
std::uint64_t multinomial(int d, std::span<const int> alpha);
double log_multinomial(int d, std::span<const int> alpha);
double multinomial_weight(int d, std::span<const int> alpha);

// Shared per-(n,d) tables: exponent vectors in the canonical order (first
// variable's exponent decreasing, recursively), multinomial weights and their
// square roots. The order is fixed and identical across runs; serialized
// coefficient vectors rely on it.
class MonomialBasis {
 public:
  static std::shared_ptr<const MonomialBasis> get(int n, int d);

  int n() const { return n_; }
  int d() const { return d_; }
  int dim() const { return static_cast<int>(exps_.rows()); }
  // dim x n matrix of exponents, row k = alpha_k
  const Eigen::MatrixXi& exponents() const { return exps_; }
  const VectorXd& weights() const { return w_; }            // binom(d, alpha)
  const VectorXd& sqrt_weights() const { return sqrt_w_; }
  int index_of(std::span<const int> alpha) const;           // -1 when absent

 private:
  MonomialBasis(int n, int d);
  int n_, d_;
  Eigen::MatrixXi exps_;
  VectorXd w_, sqrt_w_;
};

class HomogeneousPolynomial {
 public:
  HomogeneousPolynomial(int n, int d);
  HomogeneousPolynomial(int n, int d, VectorXd monomial_coeffs);
  static HomogeneousPolynomial monomial(int n, int d, std::span<const int> alpha,
                                        double coeff = 1.0);

  int n() const { return basis_->n(); }
  int d() const { return basis_->d(); }
  int dim() const { return basis_->dim(); }
  const MonomialBasis& basis() const { return *basis_; }

  const VectorXd& coeffs() const { return c_; }
  double coeff(std::span<const int> alpha) const;
  void set_coeff(std::span<const int> alpha, double value);

  double evaluate(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;
  MatrixXd hessian(const VectorXd& x) const;

  // Coordinates in the Bombieri-Weyl-orthonormal basis: y_k = c_k / sqrt(w_k).
  VectorXd bw_coords() const;
  static HomogeneousPolynomial from_bw_coords(int n, int d, const VectorXd& y);

  HomogeneousPolynomial& operator*=(double s);
  HomogeneousPolynomial& operator+=(const HomogeneousPolynomial& rhs);

 private:
  std::shared_ptr<const MonomialBasis> basis_;
  VectorXd c_;
};

double bw_inner(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q);
double bw_norm(const HomogeneousPolynomial& p);

// p(A x) by repeated multiplication with the rows of A; exact at desk scale.
HomogeneousPolynomial compose_linear(const HomogeneousPolynomial& p, const MatrixXd& a);

// Square-minus-one system: n-1 homogeneous polynomials in n variables.
class PolynomialSystem {
 public:
  explicit PolynomialSystem(std::vector<HomogeneousPolynomial> polys);

  int n() const { return n_; }
  int size() const { return static_cast<int>(polys_.size()); }
  const std::vector<int>& degree_pattern() const { return degrees_; }
  int max_degree() const { return max_degree_; }
  int min_degree() const { return min_degree_; }
  bool equal_degrees() const { return max_degree_ == min_degree_; }
  const HomogeneousPolynomial& poly(int i) const { return polys_[i]; }
  const std::vector<HomogeneousPolynomial>& polys() const { return polys_; }

  VectorXd evaluate(const VectorXd& x) const;
  MatrixXd jacobian(const VectorXd& x) const;

 private:
  std::vector<HomogeneousPolynomial> polys_;
  std::vector<int> degrees_;
  int n_, max_degree_, min_degree_;
};

inline VectorXd evaluate_system(const PolynomialSystem& P, const VectorXd& x) {
  return P.evaluate(x);
}
inline MatrixXd jacobian(const PolynomialSystem& P, const VectorXd& x) {
  return P.jacobian(x);
}

double bw_norm_system(const PolynomialSystem& P);
PolynomialSystem compose_linear(const PolynomialSystem& P, const MatrixXd& a);
PolynomialSystem scale_system(const PolynomialSystem& P, double s);
PolynomialSystem add_systems(const PolynomialSystem& a, const PolynomialSystem& b);

// diag(sqrt(d_1), ..., sqrt(d_{n-1}))
VectorXd degree_scaling(const std::vector<int>& degree_pattern);

// Reusable evaluation buffers; the certified searches call these in tight loops.
class SystemEvaluator {
 public:
  explicit SystemEvaluator(const PolynomialSystem& P);
  const PolynomialSystem& system() const { return *P_; }
  void evaluate(const VectorXd& x, VectorXd& out) const;
  void jacobian(const VectorXd& x, MatrixXd& out) const;
  double residual_norm(const VectorXd& x) const;

 private:
  void fill_powers(const VectorXd& x) const;
  const PolynomialSystem* P_;
  mutable MatrixXd pow_;  // (d_max+1) x n table of x_j^k
  mutable VectorXd val_;
};

}  // namespace polycond
