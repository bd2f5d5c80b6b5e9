#include "polycond/poly.hpp"

#include <climits>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polycond {

namespace {

void check_alpha(int d, std::span<const int> alpha) {
  long sum = 0;
  for (int a : alpha) {
    if (a < 0) throw std::invalid_argument("multinomial: negative exponent");
    sum += a;
  }
  if (sum != d) throw std::invalid_argument("multinomial: exponents do not sum to degree");
}

// binom(s, k) for s <= 60 fits in 64 bits; the multiplicative form divides at
// every step so intermediates stay exact.
std::uint64_t binom_u64(int s, int k) {
  if (k < 0 || k > s) return 0;
  k = std::min(k, s - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(s - k + i);
    r /= static_cast<unsigned>(i);
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace

std::int64_t hd_dimension(int n, int d) {
  if (n < 1 || d < 0) throw std::invalid_argument("hd_dimension: need n >= 1, d >= 0");
  // binom(n+d-1, d) stays well inside 64 bits at desk scale
  long double r = 1.0L;
  for (int i = 1; i <= d; ++i) r = r * (n - 1 + i) / i;
  return static_cast<std::int64_t>(r + 0.5L);
}

std::uint64_t multinomial(int d, std::span<const int> alpha) {
  if (d <= 0) throw std::invalid_argument("multinomial: degree must be positive");
  if (d > 60) throw std::invalid_argument("multinomial: d > 60 (use log_multinomial)");
  check_alpha(d, alpha);
  unsigned __int128 prod = 1;
  int s = 0;
  for (int a : alpha) {
    s += a;
    prod *= binom_u64(s, a);
    if (prod > static_cast<unsigned __int128>(UINT64_MAX))
      throw std::overflow_error("multinomial: value exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(prod);
}

double log_multinomial(int d, std::span<const int> alpha) {
  if (d <= 0) throw std::invalid_argument("log_multinomial: degree must be positive");
  check_alpha(d, alpha);
  double r = std::lgamma(d + 1.0);
  for (int a : alpha) r -= std::lgamma(a + 1.0);
  return r;
}

double multinomial_weight(int d, std::span<const int> alpha) {
  if (d <= 60) {
    try {
      return static_cast<double>(multinomial(d, alpha));
    } catch (const std::overflow_error&) {
      // fall through to log space
    }
  }
  return std::exp(log_multinomial(d, alpha));
}

namespace {

void gen_exponents(int n, int d, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (n == 1) {
    cur.push_back(d);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int a = d; a >= 0; --a) {
    cur.push_back(a);
    gen_exponents(n - 1, d - a, cur, out);
    cur.pop_back();
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int n, int d) : n_(n), d_(d) {
  if (n < 1 || d < 0) throw std::invalid_argument("MonomialBasis: need n >= 1, d >= 0");
  std::vector<std::vector<int>> rows;
  std::vector<int> cur;
  gen_exponents(n, d, cur, rows);
  exps_.resize(static_cast<int>(rows.size()), n);
  w_.resize(static_cast<int>(rows.size()));
  sqrt_w_.resize(w_.size());
  for (int k = 0; k < exps_.rows(); ++k) {
    for (int j = 0; j < n; ++j) exps_(k, j) = rows[k][j];
    w_[k] = d == 0 ? 1.0 : multinomial_weight(d, rows[k]);
    sqrt_w_[k] = std::sqrt(w_[k]);
  }
}

std::shared_ptr<const MonomialBasis> MonomialBasis::get(int n, int d) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, d}];
  if (!slot) slot = std::shared_ptr<const MonomialBasis>(new MonomialBasis(n, d));
  return slot;
}

int MonomialBasis::index_of(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != n_) return -1;
  for (int k = 0; k < exps_.rows(); ++k) {
    bool match = true;
    for (int j = 0; j < n_; ++j)
      if (exps_(k, j) != alpha[j]) { match = false; break; }
    if (match) return k;
  }
  return -1;
}

HomogeneousPolynomial::HomogeneousPolynomial(int n, int d)
    : basis_(MonomialBasis::get(n, d)), c_(VectorXd::Zero(basis_->dim())) {}

HomogeneousPolynomial::HomogeneousPolynomial(int n, int d, VectorXd monomial_coeffs)
    : basis_(MonomialBasis::get(n, d)), c_(std::move(monomial_coeffs)) {
  if (c_.size() != basis_->dim())
    throw std::invalid_argument("HomogeneousPolynomial: coefficient vector has wrong length");
}

HomogeneousPolynomial HomogeneousPolynomial::monomial(int n, int d,
                                                      std::span<const int> alpha,
                                                      double coeff) {
  HomogeneousPolynomial p(n, d);
  p.set_coeff(alpha, coeff);
  return p;
}

double HomogeneousPolynomial::coeff(std::span<const int> alpha) const {
  int k = basis_->index_of(alpha);
  if (k < 0) throw std::invalid_argument("coeff: exponent vector not of this degree");
  return c_[k];
}

void HomogeneousPolynomial::set_coeff(std::span<const int> alpha, double value) {
  int k = basis_->index_of(alpha);
  if (k < 0) throw std::invalid_argument("set_coeff: exponent vector not of this degree");
  c_[k] = value;
}

double HomogeneousPolynomial::evaluate(const VectorXd& x) const {
  if (x.size() != n()) throw std::invalid_argument("evaluate: point has wrong dimension");
  const auto& E = basis_->exponents();
  const int nn = n(), dd = d();
  MatrixXd pw(dd + 1, nn);
  for (int j = 0; j < nn; ++j) {
    pw(0, j) = 1.0;
    for (int k = 1; k <= dd; ++k) pw(k, j) = pw(k - 1, j) * x[j];
  }
  double s = 0.0;
  for (int k = 0; k < E.rows(); ++k) {
    if (c_[k] == 0.0) continue;
    double m = c_[k];
    for (int j = 0; j < nn; ++j) m *= pw(E(k, j), j);
    s += m;
  }
  return s;
}

VectorXd HomogeneousPolynomial::gradient(const VectorXd& x) const {
  if (x.size() != n()) throw std::invalid_argument("gradient: point has wrong dimension");
  const auto& E = basis_->exponents();
  const int nn = n(), dd = d();
  MatrixXd pw(dd + 1, nn);
  for (int j = 0; j < nn; ++j) {
    pw(0, j) = 1.0;
    for (int k = 1; k <= dd; ++k) pw(k, j) = pw(k - 1, j) * x[j];
  }
  VectorXd g = VectorXd::Zero(nn);
  for (int k = 0; k < E.rows(); ++k) {
    if (c_[k] == 0.0) continue;
    for (int j = 0; j < nn; ++j) {
      int a = E(k, j);
      if (a == 0) continue;
      double m = c_[k] * a * pw(a - 1, j);
      for (int l = 0; l < nn; ++l)
        if (l != j) m *= pw(E(k, l), l);
      g[j] += m;
    }
  }
  return g;
}

MatrixXd HomogeneousPolynomial::hessian(const VectorXd& x) const {
  if (x.size() != n()) throw std::invalid_argument("hessian: point has wrong dimension");
  const auto& E = basis_->exponents();
  const int nn = n(), dd = d();
  MatrixXd pw(dd + 1, nn);
  for (int j = 0; j < nn; ++j) {
    pw(0, j) = 1.0;
    for (int k = 1; k <= dd; ++k) pw(k, j) = pw(k - 1, j) * x[j];
  }
  MatrixXd h = MatrixXd::Zero(nn, nn);
  for (int k = 0; k < E.rows(); ++k) {
    if (c_[k] == 0.0) continue;
    for (int i = 0; i < nn; ++i) {
      int ai = E(k, i);
      if (ai == 0) continue;
      // diagonal
      if (ai >= 2) {
        double m = c_[k] * ai * (ai - 1) * pw(ai - 2, i);
        for (int l = 0; l < nn; ++l)
          if (l != i) m *= pw(E(k, l), l);
        h(i, i) += m;
      }
      for (int j = i + 1; j < nn; ++j) {
        int aj = E(k, j);
        if (aj == 0) continue;
        double m = c_[k] * ai * aj * pw(ai - 1, i) * pw(aj - 1, j);
        for (int l = 0; l < nn; ++l)
          if (l != i && l != j) m *= pw(E(k, l), l);
        h(i, j) += m;
        h(j, i) += m;
      }
    }
  }
  return h;
}

VectorXd HomogeneousPolynomial::bw_coords() const {
  return c_.cwiseQuotient(basis_->sqrt_weights());
}

HomogeneousPolynomial HomogeneousPolynomial::from_bw_coords(int n, int d, const VectorXd& y) {
  auto basis = MonomialBasis::get(n, d);
  if (y.size() != basis->dim())
    throw std::invalid_argument("from_bw_coords: coordinate vector has wrong length");
  return HomogeneousPolynomial(n, d, y.cwiseProduct(basis->sqrt_weights()));
}

HomogeneousPolynomial& HomogeneousPolynomial::operator*=(double s) {
  c_ *= s;
  return *this;
}

HomogeneousPolynomial& HomogeneousPolynomial::operator+=(const HomogeneousPolynomial& rhs) {
  if (rhs.n() != n() || rhs.d() != d())
    throw std::invalid_argument("operator+=: shape mismatch");
  c_ += rhs.c_;
  return *this;
}

double bw_inner(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q) {
  if (p.n() != q.n() || p.d() != q.d())
    throw std::invalid_argument("bw_inner: polynomials live in different spaces");
  return (p.coeffs().cwiseProduct(q.coeffs()).cwiseQuotient(p.basis().weights())).sum();
}

double bw_norm(const HomogeneousPolynomial& p) {
  return std::sqrt(std::max(0.0, bw_inner(p, p)));
}

HomogeneousPolynomial compose_linear(const HomogeneousPolynomial& p, const MatrixXd& a) {
  const int n = p.n(), d = p.d();
  if (a.rows() != n || a.cols() != n)
    throw std::invalid_argument("compose_linear: matrix must be n x n");
  // accumulate over source monomials; each x_j is replaced by row j of a
  auto target = MonomialBasis::get(n, d);
  VectorXd out = VectorXd::Zero(target->dim());
  const auto& E = p.basis().exponents();
  for (int k = 0; k < E.rows(); ++k) {
    double ck = p.coeffs()[k];
    if (ck == 0.0) continue;
    // product of linear forms, built degree by degree
    std::vector<double> cur{ck};  // degree-0 dense vector
    int curdeg = 0;
    for (int j = 0; j < n; ++j) {
      for (int rep = 0; rep < E(k, j); ++rep) {
        auto from = MonomialBasis::get(n, curdeg);
        auto to = MonomialBasis::get(n, curdeg + 1);
        std::vector<double> next(to->dim(), 0.0);
        const auto& FE = from->exponents();
        std::vector<int> beta(n);
        for (int m = 0; m < FE.rows(); ++m) {
          if (cur[m] == 0.0) continue;
          for (int v = 0; v < n; ++v) {
            double coef = cur[m] * a(j, v);
            if (coef == 0.0) continue;
            for (int t = 0; t < n; ++t) beta[t] = FE(m, t);
            beta[v] += 1;
            next[to->index_of(beta)] += coef;
          }
        }
        cur = std::move(next);
        ++curdeg;
      }
    }
    for (int m = 0; m < target->dim(); ++m) out[m] += cur[m];
  }
  return HomogeneousPolynomial(n, d, out);
}

PolynomialSystem::PolynomialSystem(std::vector<HomogeneousPolynomial> polys)
    : polys_(std::move(polys)) {
  if (polys_.empty()) throw std::invalid_argument("PolynomialSystem: empty system");
  n_ = polys_[0].n();
  if (n_ < 2) throw std::invalid_argument("PolynomialSystem: need n >= 2");
  if (static_cast<int>(polys_.size()) != n_ - 1)
    throw std::invalid_argument("PolynomialSystem: need exactly n-1 polynomials");
  max_degree_ = 0;
  min_degree_ = INT_MAX;
  for (const auto& p : polys_) {
    if (p.n() != n_) throw std::invalid_argument("PolynomialSystem: mixed variable counts");
    if (p.d() < 1) throw std::invalid_argument("PolynomialSystem: degrees must be >= 1");
    degrees_.push_back(p.d());
    max_degree_ = std::max(max_degree_, p.d());
    min_degree_ = std::min(min_degree_, p.d());
  }
}

VectorXd PolynomialSystem::evaluate(const VectorXd& x) const {
  VectorXd out(size());
  for (int i = 0; i < size(); ++i) out[i] = polys_[i].evaluate(x);
  return out;
}

MatrixXd PolynomialSystem::jacobian(const VectorXd& x) const {
  MatrixXd out(size(), n_);
  for (int i = 0; i < size(); ++i) out.row(i) = polys_[i].gradient(x).transpose();
  return out;
}

double bw_norm_system(const PolynomialSystem& P) {
  double s = 0.0;
  for (const auto& p : P.polys()) s += bw_inner(p, p);
  return std::sqrt(std::max(0.0, s));
}

PolynomialSystem compose_linear(const PolynomialSystem& P, const MatrixXd& a) {
  std::vector<HomogeneousPolynomial> out;
  out.reserve(P.size());
  for (const auto& p : P.polys()) out.push_back(compose_linear(p, a));
  return PolynomialSystem(std::move(out));
}

PolynomialSystem scale_system(const PolynomialSystem& P, double s) {
  std::vector<HomogeneousPolynomial> out;
  out.reserve(P.size());
  for (const auto& p : P.polys()) {
    auto q = p;
    q *= s;
    out.push_back(std::move(q));
  }
  return PolynomialSystem(std::move(out));
}

PolynomialSystem add_systems(const PolynomialSystem& a, const PolynomialSystem& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add_systems: size mismatch");
  std::vector<HomogeneousPolynomial> out;
  out.reserve(a.size());
  for (int i = 0; i < a.size(); ++i) {
    auto p = a.poly(i);
    p += b.poly(i);
    out.push_back(std::move(p));
  }
  return PolynomialSystem(std::move(out));
}

VectorXd degree_scaling(const std::vector<int>& degree_pattern) {
  VectorXd out(static_cast<int>(degree_pattern.size()));
  for (size_t i = 0; i < degree_pattern.size(); ++i) {
    if (degree_pattern[i] < 1) throw std::invalid_argument("degree_scaling: degrees must be >= 1");
    out[static_cast<int>(i)] = std::sqrt(static_cast<double>(degree_pattern[i]));
  }
  return out;
}

SystemEvaluator::SystemEvaluator(const PolynomialSystem& P)
    : P_(&P), pow_(P.max_degree() + 1, P.n()), val_(P.size()) {}

void SystemEvaluator::fill_powers(const VectorXd& x) const {
  const int n = P_->n(), dmax = P_->max_degree();
  for (int j = 0; j < n; ++j) {
    pow_(0, j) = 1.0;
    for (int k = 1; k <= dmax; ++k) pow_(k, j) = pow_(k - 1, j) * x[j];
  }
}

void SystemEvaluator::evaluate(const VectorXd& x, VectorXd& out) const {
  fill_powers(x);
  const int n = P_->n();
  out.resize(P_->size());
  for (int i = 0; i < P_->size(); ++i) {
    const auto& p = P_->poly(i);
    const auto& E = p.basis().exponents();
    const auto& c = p.coeffs();
    double s = 0.0;
    for (int k = 0; k < E.rows(); ++k) {
      if (c[k] == 0.0) continue;
      double m = c[k];
      for (int j = 0; j < n; ++j) m *= pow_(E(k, j), j);
      s += m;
    }
    out[i] = s;
  }
}

void SystemEvaluator::jacobian(const VectorXd& x, MatrixXd& out) const {
  fill_powers(x);
  const int n = P_->n();
  out.resize(P_->size(), n);
  out.setZero();
  for (int i = 0; i < P_->size(); ++i) {
    const auto& p = P_->poly(i);
    const auto& E = p.basis().exponents();
    const auto& c = p.coeffs();
    for (int k = 0; k < E.rows(); ++k) {
      if (c[k] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        int a = E(k, j);
        if (a == 0) continue;
        double m = c[k] * a * pow_(a - 1, j);
        for (int l = 0; l < n; ++l)
          if (l != j) m *= pow_(E(k, l), l);
        out(i, j) += m;
      }
    }
  }
}

double SystemEvaluator::residual_norm(const VectorXd& x) const {
  evaluate(x, val_);
  return val_.norm();
}

}  // namespace polycond
