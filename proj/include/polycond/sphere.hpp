#pragma once

// Delta-nets on S^{n-1}, net-based certified sup-norm extrapolation, and the
// certified minimizers shared by the dispersion and condition-number searches.
// Nets use the chord (Euclidean) metric; the adaptive cap search tracks arc
// radii internally and converts where needed.

#include "polycond/poly.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>

namespace polycond {

struct SphereNet {
  int n = 0;
  MatrixXd points;  // size x n, unit rows
  double delta_target = 0.0;
  double delta_achieved = 0.0;  // verified covering radius (chord)
  std::uint64_t seed = 0;
  bool size_warning = false;  // size exceeded the 2n(1+2/delta)^{n-1} benchmark
  int size() const { return static_cast<int>(points.rows()); }
};

// Existential benchmark for the size of a delta-net on S^{n-1}.
double net_size_benchmark(int n, double delta);

std::string default_net_cache_dir();

// n == 2: exact angular grid (delta_achieved is exact).
// n >= 3: greedy farthest-point insertion over a seeded quasi-uniform pool,
// verified against 1e5*n fresh samples; delta_achieved = max observed gap.
// Throws resource_exhausted when the candidate budget cannot reach delta.
SphereNet build_net(int n, double delta, std::uint64_t seed,
                    const std::string& cache_dir = default_net_cache_dir());

struct ResourceExhausted : std::runtime_error {
  explicit ResourceExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Net-max extrapolation: hi = lo / (1 - d*delta) for equal-degree systems,
// hi = lo / (1 - d^2*delta) otherwise. Requires the denominator positive.
Interval sup_norm_bound(const PolynomialSystem& P, const SphereNet& net);
Interval sup_norm_bound(const std::vector<HomogeneousPolynomial>& polys, const SphereNet& net);

// Orthonormal rows spanning the tangent space at unit x; deterministic
// (sign-stabilized Householder reflector).
MatrixXd tangent_basis(const VectorXd& x);

// exp_x(w) for tangent w (w need not be small)
VectorXd sphere_exp(const VectorXd& x, const VectorXd& w);

// Deterministic local refinement: finite-difference Riemannian descent with
// backtracking, then a shrinking pattern-search polish (handles objectives
// that are only Lipschitz, like smallest singular values at crossings).
VectorXd refine_on_sphere(const std::function<double(const VectorXd&)>& f,
                          const VectorXd& start, int iters);

struct MinimizeResult {
  double value_lo = 0.0;
  double value_hi = 0.0;
  VectorXd argmin;
};

// Flat-net certified minimizer: value_hi = best of net and refined starts,
// value_lo = net_min - lipschitz_chord * delta_achieved (clamped at 0 when
// the objective is declared nonnegative). lipschitz_chord is with respect to
// the chord metric. Non-finite objective values raise invalid_argument.
MinimizeResult minimize_on_sphere(const std::function<double(const VectorXd&)>& objective,
                                  double lipschitz_chord, const SphereNet& net,
                                  int refine_iters, int starts, std::uint64_t seed,
                                  bool nonnegative = false);

// Objective for the adaptive cap-subdivision search. lip_geo bounds the
// derivative along unit-speed geodesics; objectives with more structure
// override cell_lower_bound with something that shrinks faster than the
// Lipschitz cone (see quadratic_cap_bound).
class CapObjective {
 public:
  virtual ~CapObjective() = default;
  virtual double value(const VectorXd& x) const = 0;
  virtual double lip_geo() const = 0;
  // certified lower bound over the cap of arc radius r around center
  virtual double cell_lower_bound(const VectorXd& center, double r, double value_at_center) const {
    return value_at_center - lip_geo() * r;
  }
};

// Lower bound over a cap from an exact ambient gradient and Hessian at the
// center plus a bound on the third derivative along great circles
// (Bernstein: degree-D trigonometric polynomials have |F'''| <= D^3 sup|F|).
double quadratic_cap_bound(const VectorXd& center, double r, double value,
                           const VectorXd& grad, const MatrixXd& hess, double third_bound);

struct CapSearchOptions {
  double min_radius = 1e-3;  // arc; active cells are split until at or below this
  double width_abs = 0.0;    // optional early stops
  double width_rel = 0.0;
  double lb_stop = std::numeric_limits<double>::infinity();  // stop once lo >= this
  double floor = -std::numeric_limits<double>::infinity();
  std::size_t max_cells = 4000000;  // evaluation budget
  int refine_iters = 0;
  int refine_starts = 4;
};

struct CapSearchResult {
  double lo = 0.0;
  double hi = 0.0;
  VectorXd argmin;
  std::size_t cells = 0;
  bool budget_exhausted = false;
};

// Certified global minimum of obj over the sphere. Seed cells come from the
// net (cap radius = covering radius); cells are split best-first until every
// unpruned cell is below min_radius or an early stop fires. The returned lo
// is a valid lower bound for the minimum under the net covering certificate.
CapSearchResult certified_min(const CapObjective& obj, const SphereNet& net,
                              const CapSearchOptions& opts);

}  // namespace polycond
