#include "polycond/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polycond {

namespace {

constexpr double kOrthoTol = 5e-10;
constexpr double kDegenerateTol = 1e-12;

std::vector<HomogeneousPolynomial> polys_from_coords(int n, int d, const MatrixXd& coords) {
  std::vector<HomogeneousPolynomial> out;
  out.reserve(coords.rows());
  for (int i = 0; i < coords.rows(); ++i)
    out.push_back(HomogeneousPolynomial::from_bw_coords(n, d, coords.row(i).transpose()));
  return out;
}

}  // namespace

PolySubspace::PolySubspace(int n, int d, MatrixXd coords, bool validate)
    : n_(n), d_(d), coords_(std::move(coords)) {
  auto basis = MonomialBasis::get(n, d);
  if (coords_.cols() != basis->dim())
    throw std::invalid_argument("PolySubspace: coordinate rows have wrong length");
  if (coords_.rows() < 1 || coords_.rows() > basis->dim())
    throw std::invalid_argument("PolySubspace: dimension out of range");
  if (validate) {
    MatrixXd gram = coords_ * coords_.transpose();
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > kOrthoTol)
      throw std::invalid_argument("PolySubspace: basis is not Bombieri-Weyl-orthonormal");
  }
  basis_ = polys_from_coords(n, d, coords_);
}

VectorXd PolySubspace::project_bw(const HomogeneousPolynomial& p) const {
  if (p.n() != n_ || p.d() != d_) throw std::invalid_argument("project_bw: shape mismatch");
  VectorXd y = p.bw_coords();
  return coords_.transpose() * (coords_ * y);
}

PolySubspace orthonormalize(const std::vector<HomogeneousPolynomial>& generators) {
  if (generators.empty()) throw std::invalid_argument("orthonormalize: no generators");
  const int n = generators[0].n(), d = generators[0].d();
  const int N = generators[0].dim();
  std::vector<VectorXd> basis;
  for (const auto& g : generators) {
    if (g.n() != n || g.d() != d)
      throw std::invalid_argument("orthonormalize: generators live in different spaces");
    VectorXd y = g.bw_coords();
    const double scale = std::max(1.0, y.norm());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) y -= b.dot(y) * b;
    if (y.norm() > 1e-9 * scale) basis.push_back(y / y.norm());
  }
  if (basis.empty())
    throw std::invalid_argument("orthonormalize: generators span the zero space");
  MatrixXd coords(static_cast<int>(basis.size()), N);
  for (std::size_t i = 0; i < basis.size(); ++i) coords.row(static_cast<int>(i)) = basis[i].transpose();
  return PolySubspace(n, d, std::move(coords), false);
}

HomogeneousPolynomial veronese_vector(int n, int d, const VectorXd& v) {
  if (v.size() != n) throw std::invalid_argument("veronese_vector: point has wrong dimension");
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("veronese_vector: point is not unit");
  auto basis = MonomialBasis::get(n, d);
  const auto& E = basis->exponents();
  VectorXd c(basis->dim());
  for (int k = 0; k < basis->dim(); ++k) {
    double m = basis->weights()[k];
    for (int j = 0; j < n; ++j)
      for (int rep = 0; rep < E(k, j); ++rep) m *= v[j];
    c[k] = m;
  }
  return HomogeneousPolynomial(n, d, c);
}

double sigma_point(const PolySubspace& F, const VectorXd& v) {
  if (std::abs(v.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("sigma_point: point is not unit");
  SigmaSquared g(F);
  return g.basis_values(v).norm();
}

SigmaSquared::SigmaSquared(const PolySubspace& F, bool negate)
    : F_(&F), negate_(negate) {
  auto basis = MonomialBasis::get(F.n(), F.d());
  exps_ = basis->exponents();
  sqrtw_ = basis->sqrt_weights();
  pow_.resize(F.d() + 1, F.n());
  phi_.resize(basis->dim());
  u_.resize(F.dim());
  cvec_.resize(basis->dim());
  dphi_.resize(basis->dim(), F.n());
  du_.resize(F.dim(), F.n());
}

void SigmaSquared::fill_tables(const VectorXd& x) const {
  const int n = F_->n(), d = F_->d();
  for (int j = 0; j < n; ++j) {
    pow_(0, j) = 1.0;
    for (int k = 1; k <= d; ++k) pow_(k, j) = pow_(k - 1, j) * x[j];
  }
  for (int k = 0; k < exps_.rows(); ++k) {
    double m = sqrtw_[k];
    for (int j = 0; j < n; ++j) m *= pow_(exps_(k, j), j);
    phi_[k] = m;
  }
}

VectorXd SigmaSquared::basis_values(const VectorXd& x) const {
  fill_tables(x);
  return F_->coords() * phi_;
}

double SigmaSquared::value(const VectorXd& x) const {
  fill_tables(x);
  u_.noalias() = F_->coords() * phi_;
  double g = u_.squaredNorm();
  return negate_ ? -g : g;
}

double SigmaSquared::quadratic(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const {
  const int n = F_->n();
  fill_tables(x);
  u_.noalias() = F_->coords() * phi_;
  const double g = u_.squaredNorm();

  for (int k = 0; k < exps_.rows(); ++k) {
    for (int j = 0; j < n; ++j) {
      const int a = exps_(k, j);
      if (a == 0) {
        dphi_(k, j) = 0.0;
        continue;
      }
      double m = sqrtw_[k] * a * pow_(a - 1, j);
      for (int l = 0; l < n; ++l)
        if (l != j) m *= pow_(exps_(k, l), l);
      dphi_(k, j) = m;
    }
  }
  du_.noalias() = F_->coords() * dphi_;
  grad = 2.0 * du_.transpose() * u_;

  // hess = 2 (du^T du + sum_k c_k Hess phi_k), c = coords^T u
  cvec_.noalias() = F_->coords().transpose() * u_;
  hess.noalias() = 2.0 * du_.transpose() * du_;
  for (int k = 0; k < exps_.rows(); ++k) {
    const double ck = 2.0 * cvec_[k] * sqrtw_[k];
    if (ck == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const int ai = exps_(k, i);
      if (ai >= 2) {
        double m = ck * ai * (ai - 1) * pow_(ai - 2, i);
        for (int l = 0; l < n; ++l)
          if (l != i) m *= pow_(exps_(k, l), l);
        hess(i, i) += m;
      }
      if (ai == 0) continue;
      for (int j = i + 1; j < n; ++j) {
        const int aj = exps_(k, j);
        if (aj == 0) continue;
        double m = ck * ai * aj * pow_(ai - 1, i) * pow_(aj - 1, j);
        for (int l = 0; l < n; ++l)
          if (l != i && l != j) m *= pow_(exps_(k, l), l);
        hess(i, j) += m;
        hess(j, i) += m;
      }
    }
  }
  if (negate_) {
    grad = -grad;
    hess = -hess;
    return -g;
  }
  return g;
}

// ||g||_inf <= sigma_max^2 <= 1 (projection of the unit reproducing element),
// with a little headroom for the 1e-10 orthonormality tolerance.
double SigmaSquared::lip_geo() const {
  const double D = 2.0 * F_->d();
  return D * (1.0 + 1e-6);
}

// g along a great circle is a trigonometric polynomial of degree at most 2d,
// so Bernstein bounds the third geodesic derivative by (2d)^3 ||g||_inf.
double SigmaSquared::third_geo_bound() const {
  const double D = 2.0 * F_->d();
  return D * D * D * (1.0 + 1e-6);
}

double SigmaSquared::cell_lower_bound(const VectorXd& center, double r,
                                      double value_at_center) const {
  VectorXd grad;
  MatrixXd hess;
  quadratic(center, grad, hess);
  const double quad = quadratic_cap_bound(center, r, value_at_center, grad, hess,
                                          third_geo_bound());
  return std::max(quad, value_at_center - lip_geo() * r);
}

DispersionReport dispersion(const PolySubspace& F, double delta, int refine_iters,
                            const DispersionOptions& opts) {
  const int d = F.d();
  if (!(delta > 0.0 && delta <= 1.0 / (3.0 * d * d)))
    throw std::invalid_argument("dispersion: need 0 < delta <= 1/(3 d^2)");
  SphereNet net = build_net(F.n(), opts.net_delta, opts.net_seed, opts.net_cache_dir);

  // pilot scale for translating sigma-scale stops to the squared objective
  SigmaSquared gmin(F, false), gmax(F, true);
  double pilot_min = 1.0, pilot_max = 0.0;
  {
    VectorXd x(F.n());
    for (int i = 0; i < net.size(); ++i) {
      x = net.points.row(i).transpose();
      double g = gmin.value(x);
      pilot_min = std::min(pilot_min, g);
      pilot_max = std::max(pilot_max, g);
    }
  }

  CapSearchOptions copts;
  copts.min_radius = delta;
  copts.floor = 0.0;
  copts.max_cells = opts.max_cells;
  copts.refine_iters = refine_iters;
  copts.width_rel = 2.0 * opts.sigma_width_rel;  // relative widths halve under sqrt
  if (opts.sigma_width_abs > 0.0)
    copts.width_abs = 2.0 * opts.sigma_width_abs * std::sqrt(std::max(pilot_min, 1e-12));
  CapSearchResult rmin = certified_min(gmin, net, copts);

  CapSearchOptions mopts = copts;
  mopts.floor = -(1.0 + 1e-6);
  if (opts.sigma_width_abs > 0.0)
    mopts.width_abs = 2.0 * opts.sigma_width_abs * std::sqrt(std::max(pilot_max, 1e-12));
  CapSearchResult rmax = certified_min(gmax, net, mopts);

  DispersionReport rep;
  rep.net_delta = delta;
  rep.sigma_min_lo = std::sqrt(std::max(0.0, rmin.lo));
  rep.sigma_min_hi = std::sqrt(std::max(0.0, rmin.hi));
  rep.sigma_max_lo = std::sqrt(std::max(0.0, -rmax.hi));
  rep.sigma_max_hi = std::sqrt(std::max(0.0, -rmax.lo));
  rep.argmin = rmin.argmin;
  rep.argmax = rmax.argmin;
  rep.cells = rmin.cells + rmax.cells;
  rep.budget_exhausted = rmin.budget_exhausted || rmax.budget_exhausted;
  rep.degenerate = rep.sigma_min_hi < kDegenerateTol;
  rep.sigma_lo = rep.sigma_min_hi > 0.0 ? rep.sigma_max_lo / rep.sigma_min_hi : 1.0;
  rep.sigma_hi = (rep.degenerate || rep.sigma_min_lo <= 0.0)
                     ? std::numeric_limits<double>::infinity()
                     : rep.sigma_max_hi / rep.sigma_min_lo;
  return rep;
}

SystemSubspace::SystemSubspace(std::vector<PolySubspace> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("SystemSubspace: no factors");
  const int n = factors_[0].n();
  if (static_cast<int>(factors_.size()) != n - 1)
    throw std::invalid_argument("SystemSubspace: need exactly n-1 factors");
  for (const auto& f : factors_)
    if (f.n() != n) throw std::invalid_argument("SystemSubspace: mixed variable counts");
}

std::vector<int> SystemSubspace::degree_pattern() const {
  std::vector<int> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.d());
  return out;
}

int SystemSubspace::max_degree() const {
  int d = 1;
  for (const auto& f : factors_) d = std::max(d, f.d());
  return d;
}

double SystemSubspace::dim() const {
  double m = 0;
  for (const auto& f : factors_) m += f.dim();
  return m;
}

SystemSubspace SystemSubspace::full(int n, const std::vector<int>& degree_pattern) {
  std::vector<PolySubspace> factors;
  factors.reserve(degree_pattern.size());
  for (int d : degree_pattern) factors.push_back(make_named_space(SpaceKind::full, n, d));
  return SystemSubspace(std::move(factors));
}

SystemDispersion dispersion_system(const SystemSubspace& E, double delta, int refine_iters,
                                   const DispersionOptions& opts) {
  SystemDispersion out;
  out.sigma.lo = 0.0;
  out.sigma.hi = 0.0;
  for (const auto& f : E.factors()) {
    DispersionReport rep = dispersion(f, delta, refine_iters, opts);
    out.degenerate = out.degenerate || rep.degenerate;
    out.sigma.lo = std::max(out.sigma.lo, rep.sigma_lo);
    out.sigma.hi = std::max(out.sigma.hi, rep.sigma_hi);
    out.factors.push_back(std::move(rep));
  }
  return out;
}

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "full") return SpaceKind::full;
  if (s == "power_monomials" || s == "power") return SpaceKind::power_monomials;
  if (s == "sos_family" || s == "sos") return SpaceKind::sos_family;
  if (s == "degenerate") return SpaceKind::degenerate;
  throw std::invalid_argument("unknown subspace kind: " + s);
}

namespace {

PolySubspace make_full(int n, int d) {
  const int N = static_cast<int>(hd_dimension(n, d));
  return PolySubspace(n, d, MatrixXd::Identity(N, N), false);
}

PolySubspace make_power(int n, int d) {
  auto basis = MonomialBasis::get(n, d);
  MatrixXd coords = MatrixXd::Zero(n, basis->dim());
  std::vector<int> alpha(n, 0);
  for (int j = 0; j < n; ++j) {
    std::fill(alpha.begin(), alpha.end(), 0);
    alpha[j] = d;
    coords(j, basis->index_of(alpha)) = 1.0;  // x_j^d has BW norm 1
  }
  return PolySubspace(n, d, std::move(coords), false);
}

PolySubspace make_sos(int n, int d) {
  if (d < 2 || d % 2 != 0)
    throw std::invalid_argument("make_named_space: sos_family needs even d >= 2");
  const int e = d / 2 - 1;
  // (sum x_i^2)^e expanded once, then multiplied by x_k x_l
  auto ebasis = MonomialBasis::get(n, e);
  std::vector<HomogeneousPolynomial> gens;
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      HomogeneousPolynomial gen(n, d);
      for (int m = 0; m < ebasis->dim(); ++m) {
        std::vector<int> beta(n);
        for (int j = 0; j < n; ++j) beta[j] = 2 * ebasis->exponents()(m, j);
        std::vector<int> br(n);
        for (int j = 0; j < n; ++j) br[j] = ebasis->exponents()(m, j);
        double c = e == 0 ? 1.0 : multinomial_weight(e, br);
        beta[k] += 1;
        beta[l] += 1;
        gen.set_coeff(beta, gen.coeff(beta) + c);
      }
      gens.push_back(std::move(gen));
    }
  }
  return orthonormalize(gens);
}

PolySubspace make_degenerate(int n, int d, const VectorXd& u, const VectorXd& v) {
  if (u.size() != n || v.size() != n)
    throw std::invalid_argument("make_named_space: degenerate kind needs u and v");
  if (std::abs(u.norm() - 1.0) > 1e-12 || std::abs(v.norm() - 1.0) > 1e-12 ||
      std::abs(u.dot(v)) > 1e-12)
    throw std::invalid_argument("make_named_space: u, v must be orthonormal");
  auto basis = MonomialBasis::get(n, d);
  const int N = basis->dim();
  const auto& E = basis->exponents();

  // representers of p -> p(u) and p -> <grad p(u), v>, column-wise over the
  // weighted monomial basis
  MatrixXd functionals(N, 2);
  for (int k = 0; k < N; ++k) {
    double mon = 1.0;
    for (int j = 0; j < n; ++j)
      for (int rep = 0; rep < E(k, j); ++rep) mon *= u[j];
    functionals(k, 0) = basis->sqrt_weights()[k] * mon;
    double der = 0.0;
    for (int j = 0; j < n; ++j) {
      const int a = E(k, j);
      if (a == 0 || v[j] == 0.0) continue;
      double m = a * v[j];
      for (int l = 0; l < n; ++l) {
        const int al = E(k, l) - (l == j ? 1 : 0);
        for (int rep = 0; rep < al; ++rep) m *= u[l];
      }
      der += m;
    }
    functionals(k, 1) = basis->sqrt_weights()[k] * der;
  }
  Eigen::HouseholderQR<MatrixXd> qr(functionals);
  MatrixXd r = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  if (std::abs(r(0, 0)) < 1e-12 || std::abs(r(1, 1)) < 1e-12)
    throw std::invalid_argument("make_named_space: degenerate functionals are rank deficient");
  MatrixXd q = qr.householderQ();
  return PolySubspace(n, d, q.rightCols(N - 2).transpose(), false);
}

}  // namespace

PolySubspace make_named_space(SpaceKind kind, int n, int d, const VectorXd& u, const VectorXd& v) {
  if (n < 2 || d < 1) throw std::invalid_argument("make_named_space: need n >= 2, d >= 1");
  switch (kind) {
    case SpaceKind::full:
      return make_full(n, d);
    case SpaceKind::power_monomials:
      return make_power(n, d);
    case SpaceKind::sos_family:
      return make_sos(n, d);
    case SpaceKind::degenerate:
      return make_degenerate(n, d, u, v);
  }
  throw std::invalid_argument("make_named_space: unknown kind");
}

}  // namespace polycond
