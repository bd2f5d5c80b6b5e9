#include "polycond/random.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace polycond {

namespace {

double gamma_fn(double x) { return std::tgamma(x); }

// scale of the unit-variance exponential-power density: f = c_p e^{-|t/s|^p}/s
double exp_power_scale(double p) { return std::sqrt(gamma_fn(1.0 / p) / gamma_fn(3.0 / p)); }

// per-coordinate second moment of the uniform measure on the unit l_p ball,
// in log space (tgamma overflows for large dim)
double lp_ball_coordinate_var(double p, int dim) {
  return std::exp(std::lgamma(3.0 / p) + std::lgamma(dim / p + 1.0) -
                  std::lgamma(1.0 / p) - std::lgamma((dim + 2.0) / p + 1.0));
}

}  // namespace

void RandomModel::check() const {
  if (!(K > 0.0) || !(c0 > 0.0))
    throw std::invalid_argument("RandomModel: K and c0 must be positive");
  if (K * c0 < 0.25)
    throw std::invalid_argument("RandomModel: declared pair violates K*c0 >= 1/4");
  if ((family == Family::lp_ball || family == Family::exp_power) && p < 2.0)
    throw std::invalid_argument("RandomModel: p < 2 is outside the Psi_2 range");
}

RandomModel RandomModel::gaussian() {
  RandomModel m;
  m.family = Family::gaussian;
  m.K = std::sqrt(2.0);
  m.c0 = std::sqrt(2.0 / M_PI);
  m.has_density_bound = true;
  m.provenance = "exact (gaussian tail and density)";
  m.check();
  return m;
}

RandomModel RandomModel::lp_ball(double p) {
  RandomModel m;
  m.family = Family::lp_ball;
  m.p = p;
  m.K = 3.0;
  m.c0 = 2.0;
  m.has_density_bound = false;
  m.provenance = "analytic estimate (conservative Psi_2 log-concave constants)";
  m.check();
  return m;
}

RandomModel RandomModel::exp_power(double p) {
  RandomModel m;
  m.family = Family::exp_power;
  m.p = p;
  const double s = exp_power_scale(p);
  const double cp = p / (2.0 * gamma_fn(1.0 / p));  // normalizer of e^{-|t|^p}
  // directional marginals of independent coordinates can beat the coordinate
  // density by up to sqrt(2) (linear images of product densities); p = 2 is
  // exactly gaussian and needs no inflation
  const double image_factor = p == 2.0 ? 1.0 : std::sqrt(2.0);
  m.c0 = image_factor * 2.0 * cp / s;
  m.K = s * std::pow(std::log(2.0), 1.0 / p - 0.5);
  m.has_density_bound = true;
  m.provenance = "analytic estimate (coordinate density bound with the sqrt(2) "
                 "linear-image factor; K from tail crossover)";
  m.check();
  return m;
}

RandomModel RandomModel::parse(const std::string& spec, double K_override, double c0_override) {
  RandomModel m;
  auto colon = spec.find(':');
  std::string fam = colon == std::string::npos ? spec : spec.substr(0, colon);
  double p = colon == std::string::npos ? 2.0 : std::stod(spec.substr(colon + 1));
  if (fam == "gaussian") m = gaussian();
  else if (fam == "lp_ball") m = lp_ball(p);
  else if (fam == "exp_power") m = exp_power(p);
  else throw std::invalid_argument("unknown model family: " + fam);
  if (K_override > 0.0) m.K = K_override;
  if (c0_override > 0.0) {
    m.c0 = c0_override;
    m.has_density_bound = true;  // user supplied a documented bound
    m.provenance += "; user override";
  }
  m.check();
  return m;
}

RandomModel RandomModel::scaled_to_K(double target_K) const {
  if (!(target_K > 0.0)) throw std::invalid_argument("scaled_to_K: target must be positive");
  RandomModel m = *this;
  const double factor = target_K / K;
  m.scale = scale * factor;
  m.K = target_K;
  m.c0 = c0 / factor;
  m.check();
  return m;
}

std::string RandomModel::family_string() const {
  std::ostringstream os;
  switch (family) {
    case Family::gaussian: os << "gaussian"; break;
    case Family::lp_ball: os << "lp_ball:" << p; break;
    case Family::exp_power: os << "exp_power:" << p; break;
  }
  return os.str();
}

VectorXd sample_coeffs(const RandomModel& model, int dim, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("sample_coeffs: dim must be >= 1");
  VectorXd x(dim);
  switch (model.family) {
    case Family::gaussian:
      for (int i = 0; i < dim; ++i) x[i] = rng.normal();
      break;
    case Family::exp_power: {
      if (model.p < 2.0) throw std::invalid_argument("sample_coeffs: p < 2");
      const double to_unit_variance = exp_power_scale(model.p);
      for (int i = 0; i < dim; ++i) {
        double g = std::pow(rng.gamma(1.0 / model.p), 1.0 / model.p);
        double sign = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
        x[i] = sign * g * to_unit_variance;
      }
      break;
    }
    case Family::lp_ball: {
      if (model.p < 2.0) throw std::invalid_argument("sample_coeffs: p < 2");
      for (int i = 0; i < dim; ++i) {
        double g = std::pow(rng.gamma(1.0 / model.p), 1.0 / model.p);
        double sign = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
        x[i] = sign * g;
      }
      double w = rng.exponential();
      double denom = std::pow(x.array().abs().pow(model.p).sum() + w, 1.0 / model.p);
      x /= denom;  // uniform on the unit ball
      x /= std::sqrt(lp_ball_coordinate_var(model.p, dim));
      break;
    }
  }
  return x * model.scale;
}

PolynomialSystem sample_system(const SystemSubspace& E, const RandomModel& model, RngStream& rng) {
  std::vector<HomogeneousPolynomial> polys;
  polys.reserve(E.size());
  for (int i = 0; i < E.size(); ++i) {
    const auto& F = E.factor(i);
    VectorXd c = sample_coeffs(model, F.dim(), rng);
    polys.push_back(HomogeneousPolynomial::from_bw_coords(F.n(), F.d(), F.coords().transpose() * c));
  }
  return PolynomialSystem(std::move(polys));
}

PolynomialSystem sample_smoothed(const PolynomialSystem& Q, const SystemSubspace& E,
                                 const RandomModel& model, SmoothedMode mode, double delta,
                                 RngStream& rng) {
  if (Q.size() != E.size() || Q.n() != E.n())
    throw std::invalid_argument("sample_smoothed: Q and E shapes differ");
  const double qw = bw_norm_system(Q);
  double resid2 = 0.0;
  for (int i = 0; i < E.size(); ++i) {
    if (Q.poly(i).d() != E.factor(i).d())
      throw std::invalid_argument("sample_smoothed: degree pattern mismatch");
    VectorXd y = Q.poly(i).bw_coords();
    resid2 += (y - E.factor(i).project_bw(Q.poly(i))).squaredNorm();
  }
  if (std::sqrt(resid2) > 1e-9 * std::max(qw, 1e-300) && qw > 0.0)
    throw std::invalid_argument("sample_smoothed: Q lies outside span(E)");

  PolynomialSystem G = sample_system(E, model, rng);
  if (mode == SmoothedMode::additive) return add_systems(Q, G);
  return add_systems(Q, scale_system(G, delta * qw));
}

PolySubspace sample_haar_subspace(int m, int n, int d, RngStream& rng) {
  const int N = static_cast<int>(hd_dimension(n, d));
  if (m < 1 || m > N) throw std::invalid_argument("sample_haar_subspace: need 1 <= m <= dim H_d");
  for (int attempt = 0; attempt < 2; ++attempt) {
    MatrixXd g(N, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < N; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(N, m);
    MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    bool ok = true;
    for (int j = 0; j < m; ++j) {
      if (std::abs(r(j, j)) < 1e-10) { ok = false; break; }
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);  // Haar sign convention
    }
    if (ok) return PolySubspace(n, d, q.transpose(), false);
  }
  throw std::runtime_error("sample_haar_subspace: rank-deficient draw twice in a row");
}

}  // namespace polycond
