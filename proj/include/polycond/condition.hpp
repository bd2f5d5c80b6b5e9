#pragma once

// Cucker-style local and global real condition number kappa and the companion
// quantity L(P) = min over the sphere of
//   sqrt(sigma_min(Delta^{-1} DP(x)|_{T_x})^2 + ||P(x)||^2),
// with certified global brackets.

#include "polycond/poly.hpp"
#include "polycond/sphere.hpp"

#include <cstdint>
#include <limits>
#include <string>

namespace polycond {

struct LocalConditionValue {
  VectorXd point;
  double L_value = 0.0;
  double sigma_min_jac = 0.0;  // smallest singular value of the scaled restricted Jacobian
  double residual = 0.0;       // ||P(x)||_2
  double kappa = 0.0;          // +inf is flagged, not a sentinel
  bool kappa_infinite = false;
};

LocalConditionValue local_L(const PolynomialSystem& P, const VectorXd& x);

struct GlobalConditionReport {
  double L_lo = 0.0, L_hi = 0.0;
  double kappa_lo = 0.0, kappa_hi = 0.0;
  bool kappa_infinite = false;  // L_lo == 0, kappa_hi unbounded
  VectorXd argmin;
  double net_delta = 0.0;
  int refine_iters = 0;
  double bw_norm = 0.0;
  double lipschitz = 0.0;  // certified chordwise bound used for the certificate
  std::size_t cells = 0;
  bool budget_exhausted = false;
};

std::string report_to_json(const GlobalConditionReport& rep);

struct GlobalOptions {
  double width_rel = 0.0;  // optional early stop on the L bracket
  double lb_stop = std::numeric_limits<double>::infinity();  // stop once L_lo >= this
  std::size_t max_cells = 2000000;
  int net_seed = 12001;
  std::string net_cache_dir = default_net_cache_dir();
};

// Certified bracket on L(P): cap subdivision down to cell radius delta with
// the Kellogg/Weyl Lipschitz assembly (from a certified ||P||_inf upper
// bound), plus descent refinement of the inner bound. L_lo is clamped at 0;
// L_lo == 0 flags kappa_hi = +infinity downstream.
GlobalConditionReport global_L(const PolynomialSystem& P, double delta, int refine_iters,
                               const GlobalOptions& opts = {});

// bw_norm_system(P) divided by the global_L bracket; zero system is rejected.
GlobalConditionReport global_kappa(const PolynomialSystem& P, double delta, int refine_iters,
                                   const GlobalOptions& opts = {});

// Lipschitz bound (per unit arc length) for x -> L(P,x), assembled from
// Kellogg-type bounds with the given sup-norm upper bound.
double L_lipschitz_geo(const PolynomialSystem& P, double sup_norm_hi);

}  // namespace polycond
