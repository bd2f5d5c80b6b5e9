#include "polycond/condition.hpp"

#include "polycond/io.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace polycond {

namespace {

double smallest_singular_value(const MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  if (m == 1) return std::abs(a(0, 0));
  if (m == 2) {
    const double q = a.squaredNorm();
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = std::sqrt(std::max(0.0, q * q - 4.0 * det * det));
    const double smax2 = 0.5 * (q + disc);
    if (smax2 <= 0.0) return 0.0;
    return std::abs(det) / std::sqrt(smax2);
  }
  Eigen::JacobiSVD<MatrixXd> svd(a);
  return svd.singularValues().minCoeff();
}

// Value of L(P, .) with reusable buffers for the cap search.
class LObjective : public CapObjective {
 public:
  LObjective(const PolynomialSystem& P, double lip)
      : ev_(P), lip_(lip), inv_scaling_(degree_scaling(P.degree_pattern()).cwiseInverse()) {}

  double value(const VectorXd& x) const override {
    ev_.evaluate(x, val_);
    ev_.jacobian(x, jac_);
    MatrixXd b = tangent_basis(x);
    restricted_.noalias() = jac_ * b.transpose();
    restricted_.array().colwise() *= inv_scaling_.array();
    const double smin = smallest_singular_value(restricted_);
    return std::hypot(smin, val_.norm());
  }

  double lip_geo() const override { return lip_; }

 private:
  SystemEvaluator ev_;
  double lip_;
  VectorXd inv_scaling_;
  mutable VectorXd val_;
  mutable MatrixXd jac_, restricted_;
};

}  // namespace

double L_lipschitz_geo(const PolynomialSystem& P, double sup_norm_hi) {
  const double d = P.max_degree();
  const double dmin = P.min_degree();
  // ||D^(1)P||_inf by the Kellogg-type bound; equal-degree systems get d, not d^2
  const double first_deriv = (P.equal_degrees() ? d : d * d) * sup_norm_hi;
  // singular-value term via Weyl: J variation + projector variation
  const double lip_sigma = ((d - 1.0) * first_deriv + first_deriv) / std::sqrt(dmin);
  // residual term: |d/dt ||P(c(t))||| <= d ||P||_inf along geodesics
  const double lip_res = d * sup_norm_hi;
  return std::hypot(lip_sigma, lip_res);
}

LocalConditionValue local_L(const PolynomialSystem& P, const VectorXd& x) {
  if (std::abs(x.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("local_L: point is not on the unit sphere");
  LocalConditionValue out;
  out.point = x;
  VectorXd px = P.evaluate(x);
  MatrixXd b = tangent_basis(x);
  MatrixXd a = P.jacobian(x) * b.transpose();
  VectorXd inv_scaling = degree_scaling(P.degree_pattern()).cwiseInverse();
  a.array().colwise() *= inv_scaling.array();
  out.sigma_min_jac = smallest_singular_value(a);
  out.residual = px.norm();
  out.L_value = std::hypot(out.sigma_min_jac, out.residual);
  const double w = bw_norm_system(P);
  if (out.L_value > 0.0) {
    out.kappa = w / out.L_value;
  } else {
    out.kappa = std::numeric_limits<double>::infinity();
    out.kappa_infinite = true;
  }
  return out;
}

GlobalConditionReport global_L(const PolynomialSystem& P, double delta, int refine_iters,
                               const GlobalOptions& opts) {
  const int d = P.max_degree();
  if (!(delta > 0.0 && delta <= 1.0 / (3.0 * d * d)))
    throw std::invalid_argument("global_L: need 0 < delta <= 1/(3 d^2)");

  const double w = bw_norm_system(P);
  // ||P||_inf <= ||P||_W always (reproducing property); tighten through the
  // net when it is fine enough for the extrapolation factor.
  double net_delta = std::min(0.25, 0.5 / (P.equal_degrees() ? d : d * d));
  SphereNet net = build_net(P.n(), net_delta, opts.net_seed, opts.net_cache_dir);
  double sup_hi = w;
  {
    Interval sup = sup_norm_bound(P, net);
    sup_hi = std::min(sup_hi, sup.hi);
  }
  const double lip = L_lipschitz_geo(P, sup_hi);

  LObjective obj(P, lip);
  CapSearchOptions copts;
  copts.min_radius = delta;
  copts.floor = 0.0;
  copts.max_cells = opts.max_cells;
  copts.refine_iters = refine_iters;
  copts.width_rel = opts.width_rel;
  copts.lb_stop = opts.lb_stop;
  CapSearchResult r = certified_min(obj, net, copts);

  GlobalConditionReport rep;
  rep.L_lo = std::max(0.0, r.lo);
  rep.L_hi = r.hi;
  rep.argmin = r.argmin;
  rep.net_delta = delta;
  rep.refine_iters = refine_iters;
  rep.bw_norm = w;
  rep.lipschitz = lip;
  rep.cells = r.cells;
  rep.budget_exhausted = r.budget_exhausted;
  rep.kappa_lo = rep.L_hi > 0.0 ? w / rep.L_hi : std::numeric_limits<double>::infinity();
  if (rep.L_lo > 0.0) {
    rep.kappa_hi = w / rep.L_lo;
  } else {
    rep.kappa_hi = std::numeric_limits<double>::infinity();
    rep.kappa_infinite = true;
  }
  return rep;
}

GlobalConditionReport global_kappa(const PolynomialSystem& P, double delta, int refine_iters,
                                   const GlobalOptions& opts) {
  if (bw_norm_system(P) == 0.0)
    throw std::invalid_argument("global_kappa: zero system (kappa is 0/0)");
  return global_L(P, delta, refine_iters, opts);
}

std::string report_to_json(const GlobalConditionReport& rep) {
  nlohmann::json j;
  j["L_lo"] = rep.L_lo;
  j["L_hi"] = rep.L_hi;
  j["kappa_lo"] = rep.kappa_lo;
  j["kappa_infinite"] = rep.kappa_infinite;
  if (!rep.kappa_infinite) j["kappa_hi"] = rep.kappa_hi;
  j["argmin"] = std::vector<double>(rep.argmin.data(), rep.argmin.data() + rep.argmin.size());
  j["net_delta"] = rep.net_delta;
  j["refine_iters"] = rep.refine_iters;
  j["bw_norm"] = rep.bw_norm;
  j["lipschitz"] = rep.lipschitz;
  j["cells"] = rep.cells;
  j["budget_exhausted"] = rep.budget_exhausted;
  return j.dump(2);
}

}  // namespace polycond
