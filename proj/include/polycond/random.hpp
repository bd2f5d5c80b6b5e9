#pragma once

// The centering / sub-Gaussian(K) / small-ball(c0) randomness model:
// standard gaussians, uniform measures on l_p balls (p >= 2), and
// exponential-power densities c_p e^{-|t|^p}, all sampled in the
// Bombieri-Weyl-orthonormal coordinates of the target subspace.

#include "polycond/poly.hpp"
#include "polycond/rng.hpp"
#include "polycond/subspace.hpp"

#include <cstdint>
#include <string>

namespace polycond {

enum class Family { gaussian, lp_ball, exp_power };

struct RandomModel {
  Family family = Family::gaussian;
  double p = 2.0;      // exponent for lp_ball / exp_power
  double K = 0.0;      // sub-Gaussian constant
  double c0 = 0.0;     // small-ball / anti-concentration constant
  double scale = 1.0;  // extra multiplier on top of the unit-variance sampler
  bool has_density_bound = false;  // anti-concentration mode usable
  std::string provenance;

  // K = sqrt(2) from the 2e^{-t^2/2} tail, c0 = sqrt(2/pi) from the two-sided
  // density bound 2/sqrt(2 pi).
  static RandomModel gaussian();
  // documented conservative constants for isotropic Psi_2 log-concave bodies;
  // no density bound is declared, so anti-concentration mode rejects it.
  static RandomModel lp_ball(double p);
  // c0 = 2 f(0) of the unit-variance density, K minimal with
  // min(1, 2e^{-(t/s)^p}) <= 2e^{-t^2/K^2} for all t.
  static RandomModel exp_power(double p);

  // "gaussian" | "lp_ball:p" | "exp_power:p", optional K/c0 overrides
  // (overriding c0 counts as supplying a documented density bound).
  static RandomModel parse(const std::string& spec, double K_override = 0.0,
                           double c0_override = 0.0);

  // lambda X has constants (lambda K, c0 / lambda); K c0 is invariant
  RandomModel scaled_to_K(double target_K) const;

  std::string family_string() const;

 private:
  void check() const;  // K c0 >= 1/4
};

struct SeedPlan {
  std::uint64_t master = 0;
  RngStream stream(std::uint64_t trial) const { return RngStream(master, trial); }
  RngStream stream(std::uint64_t trial, std::uint64_t role) const {
    return RngStream(master, trial, role);
  }
};

// iid unit-variance coordinates (times model.scale); lp_ball draws one vector
// uniform on the scaled ball. p < 2 families are rejected.
VectorXd sample_coeffs(const RandomModel& model, int dim, RngStream& rng);

PolynomialSystem sample_system(const SystemSubspace& E, const RandomModel& model, RngStream& rng);

enum class SmoothedMode { additive, delta_scaled };

// additive: Q + G. delta_scaled: Q + delta ||Q||_W G. Q must lie in span(E)
// (projection residual <= 1e-9 ||Q||_W).
PolynomialSystem sample_smoothed(const PolynomialSystem& Q, const SystemSubspace& E,
                                 const RandomModel& model, SmoothedMode mode, double delta,
                                 RngStream& rng);

// span of m iid gaussian elements of H_d, orthonormalized; Haar on Gr(m, dim H_d)
PolySubspace sample_haar_subspace(int m, int n, int d, RngStream& rng);

}  // namespace polycond
