#pragma once

// Linear subspaces of H_d with Bombieri-Weyl-orthonormal bases, the named
// example spaces, and certified dispersion constants sigma_min/max/ratio.

#include "polycond/poly.hpp"
#include "polycond/sphere.hpp"

#include <string>
#include <vector>

namespace polycond {

class PolySubspace {
 public:
  // rows of coords are BW coordinates of the basis elements; must be
  // orthonormal (validated when validate = true)
  PolySubspace(int n, int d, MatrixXd coords, bool validate = true);

  int n() const { return n_; }
  int d() const { return d_; }
  int dim() const { return static_cast<int>(coords_.rows()); }
  int ambient_dim() const { return static_cast<int>(coords_.cols()); }
  const MatrixXd& coords() const { return coords_; }
  const std::vector<HomogeneousPolynomial>& basis() const { return basis_; }
  bool is_full() const { return dim() == ambient_dim(); }

  // BW-orthogonal projection of p onto the subspace, as BW coordinates
  VectorXd project_bw(const HomogeneousPolynomial& p) const;

 private:
  int n_, d_;
  MatrixXd coords_;
  std::vector<HomogeneousPolynomial> basis_;
};

// Gram-Schmidt in the Bombieri-Weyl inner product with rank detection:
// generators whose residual after projection falls below 1e-9 (relative to
// max(1, generator norm)) are dropped. All-zero input raises invalid_argument.
PolySubspace orthonormalize(const std::vector<HomogeneousPolynomial>& generators);

// q_v = sum_k phi_k(v) phi_k, the reproducing element: <f, q_v>_W = f(v),
// ||q_v||_W = 1. v must be unit to 1e-12.
HomogeneousPolynomial veronese_vector(int n, int d, const VectorXd& v);

// sqrt(sum_j u_j(v)^2); basis independent.
double sigma_point(const PolySubspace& F, const VectorXd& v);

// Fast value/gradient/Hessian of g(v) = sum_j u_j(v)^2 for the cap search.
class SigmaSquared : public CapObjective {
 public:
  explicit SigmaSquared(const PolySubspace& F, bool negate = false);
  double value(const VectorXd& x) const override;
  double lip_geo() const override;
  double cell_lower_bound(const VectorXd& center, double r, double value_at_center) const override;
  double quadratic(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const;
  double third_geo_bound() const;
  VectorXd basis_values(const VectorXd& x) const;  // (u_1(v), ..., u_m(v))

 private:
  void fill_tables(const VectorXd& x) const;
  const PolySubspace* F_;
  bool negate_;
  Eigen::MatrixXi exps_;
  VectorXd sqrtw_;
  mutable MatrixXd pow_;
  mutable VectorXd phi_, u_, cvec_;
  mutable MatrixXd dphi_, du_;
};

struct DispersionReport {
  double sigma_min_lo = 0.0, sigma_min_hi = 0.0;
  double sigma_max_lo = 0.0, sigma_max_hi = 0.0;
  double sigma_lo = 0.0, sigma_hi = 0.0;  // hi is +inf when degenerate
  VectorXd argmin, argmax;
  double net_delta = 0.0;
  bool degenerate = false;
  std::size_t cells = 0;
  bool budget_exhausted = false;
};

struct DispersionOptions {
  double sigma_width_abs = 0.0;  // optional early stops, on the sigma scale
  double sigma_width_rel = 0.0;
  std::size_t max_cells = 4000000;
  int net_seed = 12001;
  double net_delta = 0.25;
  std::string net_cache_dir = default_net_cache_dir();
};

// Certified brackets on sigma_min/sigma_max by cap subdivision down to cell
// radius delta (0 < delta <= 1/(3 d^2)); refine_iters tightens the inner
// bounds only. A certified sigma_min upper bound below 1e-12 flags the space
// degenerate (sigma_hi = +inf), never an exception.
DispersionReport dispersion(const PolySubspace& F, double delta, int refine_iters,
                            const DispersionOptions& opts = {});

class SystemSubspace {
 public:
  explicit SystemSubspace(std::vector<PolySubspace> factors);
  int n() const { return factors_[0].n(); }
  int size() const { return static_cast<int>(factors_.size()); }
  const PolySubspace& factor(int i) const { return factors_[i]; }
  const std::vector<PolySubspace>& factors() const { return factors_; }
  std::vector<int> degree_pattern() const;
  int max_degree() const;
  double dim() const;  // sum of factor dimensions

  static SystemSubspace full(int n, const std::vector<int>& degree_pattern);

 private:
  std::vector<PolySubspace> factors_;
};

struct SystemDispersion {
  Interval sigma;  // interval max over factors
  bool degenerate = false;
  std::vector<DispersionReport> factors;
};

SystemDispersion dispersion_system(const SystemSubspace& E, double delta, int refine_iters,
                                   const DispersionOptions& opts = {});

enum class SpaceKind { full, power_monomials, sos_family, degenerate };
SpaceKind space_kind_from_string(const std::string& s);

// full: all of H_d. power_monomials: span{x_1^d, ..., x_n^d}.
// sos_family: span{(sum x_i^2)^{d/2-1} x_k x_l}, d even. degenerate: the
// codimension-2 space {p : p(u) = <grad p(u), v> = 0} for orthonormal u, v.
PolySubspace make_named_space(SpaceKind kind, int n, int d,
                              const VectorXd& u = VectorXd(), const VectorXd& v = VectorXd());

}  // namespace polycond
