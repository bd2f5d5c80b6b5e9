#pragma once

// Theorem-bound calculators (the M formulas), seeded Monte Carlo tail and
// expectation checks, the well-conditioned-approximant search, and the
// Grassmannian / Gaussian-complexity experiments. Reports freeze their rows
// into formatted cells so reruns with the same config and seed are
// bit-identical in CSV.

#include "polycond/condition.hpp"
#include "polycond/random.hpp"
#include "polycond/subspace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polycond {

inline constexpr const char* kVersionTag = "polycond 0.1.0";

inline double log_ed(int d) { return 1.0 + std::log(static_cast<double>(d)); }

struct BoundConfig {
  double C = 4.0;        // universal constant, >= 4
  int log_exponent = 1;  // 1 (headline statement) or 2 (restated form)
  double a1 = 1.0, a2 = 1.0, a3 = 1.0;  // auxiliary absolute constants, not from the source
  void validate() const;
};

struct MValue {
  double value = 0.0;
  bool infinite = false;  // degenerate space
};

// M = n K sqrt(dim E) (c0 C K d^2 log(ed)^q sigma(E))^{2n-2}, sigma from the
// bracket's hi end.
MValue compute_M_average(const SystemSubspace& E, double K, double c0, const BoundConfig& bounds,
                         const SystemDispersion& disp);

enum class SmoothedVariant { statement, remark };

// statement: extra factor (1 + ||Q||_W / (sqrt(n) K log(ed)))^{2n-1}.
// remark: (1 + ||Q||_W) (1 + ||Q||_inf / (sqrt(n) log(ed) K sigma_max))^{2n-2}
// with ||Q||_inf through its certified interval.
MValue compute_M_smoothed(const SystemSubspace& E, const PolynomialSystem& Q, double K, double c0,
                          const BoundConfig& bounds, const SystemDispersion& disp,
                          SmoothedVariant variant, const Interval& q_sup);

// delta-perturbation corollary form (model rescaled to K = 1):
// M = n sqrt(dim E) (c0 C d^2 log(ed) sigma)^{2n-2} delta ||Q||_W
//     (1 + 1/(delta sqrt(n) log(ed)))^{2n-1}
MValue compute_M_delta_scaled(const SystemSubspace& E, const PolynomialSystem& Q, double c0_at_K1,
                              double delta, const BoundConfig& bounds,
                              const SystemDispersion& disp);

// 3/sqrt(t) up to t = e^{2 n log(ed)}, then the (log t / (2n log(ed)))^{n/2}
// branch.
double kappa_tail_bound(double t, int n, int d);

struct WilsonCI {
  double lo = 0.0, hi = 0.0;
};
WilsonCI wilson_ci(long successes, long trials, double z = 1.959963984540054);

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> config;  // echoed, ordered
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> aux_columns;
  std::vector<std::vector<std::string>> aux_rows;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  // JSON only; never in the CSV
  std::string version = kVersionTag;
  bool inconclusive = false;

  std::string csv() const;
  std::string json() const;
};

struct TailRow {
  std::string check = "kappa";
  double t = 0.0, M = 0.0, threshold = 0.0;
  long exceed = 0, ambiguous = 0, trials = 0;
  double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0, bound = 0.0;
  bool pass = false;
};

struct TailOptions {
  double kappa_delta = 1e-5;  // finest cell radius for the per-trial search
  int kappa_refine = 40;
  double kappa_width_rel = 0.5;
  std::size_t kappa_max_cells = 300000;
  double dispersion_delta = 0.01;
  double dispersion_width_rel = 2e-3;
  int net_seed = 12001;
  std::string net_cache_dir = default_net_cache_dir();
  bool aux_checks = true;
  double ambiguous_fail_fraction = 0.05;
};

struct TailResult {
  ExperimentReport report;
  std::vector<TailRow> rows;        // one per t in the grid
  std::vector<TailRow> wnorm_rows;  // ||P||_W tail checks
  std::vector<TailRow> supnorm_rows;
  double M = 0.0;
  double mean_log_kappa_lo = 0.0;
  double mean_log_kappa_hi = 0.0;  // +inf if any trial was unresolved upward
  long infinite_kappa_trials = 0;
  double elog_bound = 0.0;  // 1 + log M
  bool expectation_pass = false;
  bool inconclusive = false;
};

TailResult run_tail_experiment(const SystemSubspace& E, const RandomModel& model, long trials,
                               const std::vector<double>& t_grid, const BoundConfig& bounds,
                               std::uint64_t seed, const TailOptions& opts = {});

TailResult run_smoothed_tail_experiment(const SystemSubspace& E, const PolynomialSystem& Q,
                                        const RandomModel& model, long trials,
                                        const std::vector<double>& t_grid, SmoothedMode mode,
                                        double delta, SmoothedVariant variant,
                                        const BoundConfig& bounds, std::uint64_t seed,
                                        const TailOptions& opts = {});

// Norm-only tail check of the stated e^{1 - t^2 dimE / K^2} bound at
// threshold t sqrt(dim E), plus the K-scaled threshold variant for contrast.
struct NormTailResult {
  ExperimentReport report;
  std::vector<TailRow> rows;          // stated form
  std::vector<TailRow> scaled_rows;   // threshold t K sqrt(dim E)
};
NormTailResult run_norm_tail(const SystemSubspace& E, const RandomModel& model, long trials,
                             const std::vector<double>& t_grid, std::uint64_t seed);

struct ApproxAttempt {
  int attempt = 0;
  double distance = 0.0;
  double distance_bound = 0.0;
  bool distance_ok = false;
  double kappa_lo = 0.0, kappa_hi = 0.0;
  bool kappa_ok = false;
  bool ambiguous = false;
};

struct ApproxResult {
  ExperimentReport report;
  bool found = false;
  int found_attempt = -1;
  double kappa_bound = 0.0;
  double best_kappa_hi = std::numeric_limits<double>::infinity();
  double distance_success_rate = 0.0;
  double joint_success_rate = 0.0;
  std::vector<ApproxAttempt> attempts;
  std::optional<PolynomialSystem> best;  // the found candidate, else the best-kappa one
};

ApproxResult find_wellconditioned(const PolynomialSystem& Q, const SystemSubspace& E,
                                  double epsilon, int attempts, const BoundConfig& bounds,
                                  std::uint64_t seed, const TailOptions& opts = {});

struct GrassmannRow {
  int m = 0;
  long samples = 0;
  double q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
  double finite_fraction = 0.0;
  double bound = 0.0;  // corollary curve at the configured (C, t)
};

struct GrassmannResult {
  ExperimentReport report;
  std::vector<GrassmannRow> rows;
};

GrassmannResult run_grassmann_dispersion(int n, int d, const std::vector<int>& m_grid,
                                         long samples, std::uint64_t seed, double C_overlay = 1.0,
                                         double t_overlay = 1.0, const TailOptions& opts = {});

struct GammaEstimate {
  ExperimentReport report;
  double estimate = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double ratio = 0.0;  // estimate / (sqrt(n) log(ed))
};

GammaEstimate estimate_veronese_complexity(int n, int d, long samples, std::uint64_t seed,
                                           double net_delta = 0.0,
                                           const std::string& net_cache_dir = default_net_cache_dir());

}  // namespace polycond
