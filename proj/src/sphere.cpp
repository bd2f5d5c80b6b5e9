#include "polycond/sphere.hpp"

#include "polycond/io.hpp"
#include "polycond/rng.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include <unordered_map>

namespace polycond {

namespace fs = std::filesystem;

double net_size_benchmark(int n, double delta) {
  return 2.0 * n * std::pow(1.0 + 2.0 / delta, n - 1);
}

std::string default_net_cache_dir() {
  if (const char* env = std::getenv("POLYCOND_NET_CACHE")) return env;
  return ".polycond-net-cache";
}

namespace {

std::string cache_file_name(int n, double delta, std::uint64_t seed) {
  std::ostringstream os;
  os << "net_n" << n << "_delta" << format_double(delta) << "_seed" << seed << ".txt";
  return os.str();
}

bool load_net(const fs::path& path, SphereNet& net) {
  std::ifstream in(path);
  if (!in) return false;
  int n = 0, size = 0;
  double dt = 0, da = 0;
  std::uint64_t seed = 0;
  if (!(in >> n >> dt >> da >> seed >> size)) return false;
  if (n < 2 || size < 1) return false;
  MatrixXd pts(size, n);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> pts(i, j))) return false;
  net.n = n;
  net.points = std::move(pts);
  net.delta_target = dt;
  net.delta_achieved = da;
  net.seed = seed;
  net.size_warning = net.size() > net_size_benchmark(n, dt);
  return true;
}

void store_net(const fs::path& dir, const fs::path& path, const SphereNet& net) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp);
    if (!out) return;  // cache is best-effort
    out << net.n << " " << format_double(net.delta_target) << " "
        << format_double(net.delta_achieved) << " " << net.seed << " " << net.size() << "\n";
    for (int i = 0; i < net.size(); ++i) {
      for (int j = 0; j < net.n; ++j) out << (j ? " " : "") << format_double(net.points(i, j));
      out << "\n";
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp, ec);
}

SphereNet build_circle_net(double delta) {
  // k equally spaced angles; worst chord distance is 2 sin(pi/(2k))
  int k = std::max<int>(4, static_cast<int>(std::ceil(M_PI / std::asin(std::min(1.0, delta) / 2.0))));
  SphereNet net;
  net.n = 2;
  net.points.resize(k, 2);
  for (int i = 0; i < k; ++i) {
    double a = 2.0 * M_PI * i / k;
    net.points(i, 0) = std::cos(a);
    net.points(i, 1) = std::sin(a);
  }
  net.delta_achieved = 2.0 * std::sin(M_PI / (2.0 * k));
  return net;
}

// Pool points bucketed on a uniform grid; hash collisions only add candidates
// since all decisions re-check true distances.
class PointGrid {
 public:
  PointGrid(const MatrixXd& pts, double h) : pts_(pts), n_(static_cast<int>(pts.cols())), h_(h) {
    for (int i = 0; i < pts.rows(); ++i) cells_[key(pts.row(i))].push_back(i);
  }

  template <class F>
  void for_each_in_box(const Eigen::RowVectorXd& q, double rad, F&& f) const {
    std::array<int, 8> lo{}, hi{};
    double expected = 1.0;
    for (int j = 0; j < n_; ++j) {
      lo[j] = cell_coord(q[j] - rad);
      hi[j] = cell_coord(q[j] + rad);
      expected *= hi[j] - lo[j] + 1;
    }
    if (expected > 200000.0) {  // degenerate query; let caller fall back
      for (int i = 0; i < pts_.rows(); ++i) f(i);
      return;
    }
    std::array<int, 8> idx = lo;
    for (;;) {
      std::uint64_t k = 1469598103934665603ULL;
      for (int j = 0; j < n_; ++j) k = (k ^ static_cast<std::uint64_t>(idx[j] + (1 << 20))) * 1099511628211ULL;
      auto it = cells_.find(k);
      if (it != cells_.end())
        for (int i : it->second) f(i);
      int j = 0;
      for (; j < n_; ++j) {
        if (++idx[j] <= hi[j]) break;
        idx[j] = lo[j];
      }
      if (j == n_) break;
    }
  }

  // squared distance to nearest of a point set, by expanding box queries
  double nearest_dist(const Eigen::RowVectorXd& q, double start_rad) const {
    double rad = start_rad;
    for (;;) {
      double best2 = std::numeric_limits<double>::infinity();
      for_each_in_box(q, rad, [&](int i) {
        best2 = std::min(best2, (pts_.row(i) - q).squaredNorm());
      });
      if (best2 <= rad * rad) return std::sqrt(best2);
      if (rad > 4.0) return std::sqrt(best2);  // scanned everything
      rad *= 2.0;
    }
  }

 private:
  int cell_coord(double x) const { return static_cast<int>(std::floor((x + 2.0) / h_)); }
  std::uint64_t key(const Eigen::RowVectorXd& p) const {
    std::uint64_t k = 1469598103934665603ULL;
    for (int j = 0; j < n_; ++j)
      k = (k ^ static_cast<std::uint64_t>(cell_coord(p[j]) + (1 << 20))) * 1099511628211ULL;
    return k;
  }
  const MatrixXd& pts_;
  int n_;
  double h_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

SphereNet greedy_net(int n, double delta, std::uint64_t seed) {
  if (n > 8) throw std::invalid_argument("build_net: n > 8 not supported");
  const double benchmark = net_size_benchmark(n, delta);
  const std::size_t max_net = static_cast<std::size_t>(std::min(4e6, 8.0 * benchmark));
  const std::size_t pool_size = static_cast<std::size_t>(
      std::clamp(40.0 * benchmark, 20000.0, 3.0e6));

  RngStream rng(seed, 0xfeedULL);
  MatrixXd pool(static_cast<int>(pool_size), n);
  for (int i = 0; i < pool.rows(); ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < n; ++j) pool(i, j) = rng.normal();
      norm2 = pool.row(i).squaredNorm();
    } while (norm2 < 1e-12);
    pool.row(i) /= std::sqrt(norm2);
  }

  PointGrid grid(pool, std::clamp(delta, 0.01, 0.5));

  std::vector<double> neardist(pool_size, std::numeric_limits<double>::infinity());
  std::priority_queue<std::pair<double, int>> heap;  // lazy max-heap
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(benchmark / 2) + 16);

  auto insert = [&](int q, double known_max) {
    const auto row = pool.row(q);
    auto update = [&](int i) {
      double d2 = (pool.row(i) - row).squaredNorm();
      double d = std::sqrt(d2);
      if (d < neardist[i]) {
        neardist[i] = d;
        heap.emplace(d, i);
      }
    };
    if (known_max > 0.5) {
      for (int i = 0; i < pool.rows(); ++i) update(i);
    } else {
      grid.for_each_in_box(row, known_max, update);
    }
    chosen.push_back(q);
  };

  double inner_target = 0.85 * delta;
  insert(0, 2.0);
  for (;;) {
    // current farthest pool point
    int far_idx = -1;
    double far = 0.0;
    while (!heap.empty()) {
      auto [d, i] = heap.top();
      if (d == neardist[i]) {
        far_idx = i;
        far = d;
        break;
      }
      heap.pop();
    }
    if (far_idx < 0 || far <= inner_target) break;
    if (chosen.size() >= max_net)
      throw ResourceExhausted("build_net: candidate budget exhausted at covering radius " +
                              format_double(far));
    heap.pop();
    insert(far_idx, far);
  }

  SphereNet net;
  net.n = n;
  net.seed = seed;
  net.delta_target = delta;
  net.points.resize(static_cast<int>(chosen.size()), n);
  for (std::size_t i = 0; i < chosen.size(); ++i) net.points.row(static_cast<int>(i)) = pool.row(chosen[i]);

  // probabilistic covering certificate from fresh samples
  PointGrid net_grid(net.points, std::clamp(delta, 0.01, 0.5));
  RngStream vrng(seed, 0xbeefULL);
  const long samples = 100000L * n;
  double worst = 0.0;
  Eigen::RowVectorXd s(n);
  for (long k = 0; k < samples; ++k) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < n; ++j) s[j] = vrng.normal();
      norm2 = s.squaredNorm();
    } while (norm2 < 1e-12);
    s /= std::sqrt(norm2);
    worst = std::max(worst, net_grid.nearest_dist(s, delta));
  }
  net.delta_achieved = worst;
  if (net.delta_achieved > delta)
    throw ResourceExhausted("build_net: verification found covering radius " +
                            format_double(net.delta_achieved) + " above target " +
                            format_double(delta));
  net.size_warning = net.size() > benchmark;
  return net;
}

}  // namespace

SphereNet build_net(int n, double delta, std::uint64_t seed, const std::string& cache_dir) {
  if (n < 2) throw std::invalid_argument("build_net: need n >= 2");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("build_net: need 0 < delta <= 1");
  if (n == 2) {
    SphereNet net = build_circle_net(delta);
    net.delta_target = delta;
    net.seed = seed;
    net.size_warning = net.size() > net_size_benchmark(2, delta);
    return net;
  }
  // nets are immutable; keep them in memory across calls so per-trial reuse
  // inside experiments costs nothing
  static std::mutex mu;
  static std::map<std::string, SphereNet> mem;
  fs::path dir(cache_dir);
  fs::path file = dir / cache_file_name(n, delta, seed);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = mem.find(file.string());
    if (it != mem.end()) return it->second;
  }
  SphereNet net;
  if (!load_net(file, net)) {
    net = greedy_net(n, delta, seed);
    store_net(dir, file, net);
  }
  std::lock_guard<std::mutex> lock(mu);
  mem.emplace(file.string(), net);
  return net;
}

Interval sup_norm_bound(const std::vector<HomogeneousPolynomial>& polys, const SphereNet& net) {
  if (polys.empty()) throw std::invalid_argument("sup_norm_bound: empty polynomial list");
  const int n = polys[0].n();
  if (net.n != n) throw std::invalid_argument("sup_norm_bound: net dimension mismatch");
  int d = 1, dmin = INT_MAX;
  for (const auto& p : polys) {
    if (p.n() != n) throw std::invalid_argument("sup_norm_bound: mixed variable counts");
    d = std::max(d, p.d());
    dmin = std::min(dmin, p.d());
  }
  const double factor = (d == dmin) ? d * net.delta_achieved
                                    : static_cast<double>(d) * d * net.delta_achieved;
  if (factor >= 1.0)
    throw std::invalid_argument("sup_norm_bound: net too coarse for this degree");
  const int dmax = d;
  MatrixXd pw(dmax + 1, n);
  double lo = 0.0;
  for (int i = 0; i < net.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      pw(0, j) = 1.0;
      for (int k = 1; k <= dmax; ++k) pw(k, j) = pw(k - 1, j) * net.points(i, j);
    }
    double s2 = 0.0;
    for (const auto& p : polys) {
      const auto& E = p.basis().exponents();
      const auto& c = p.coeffs();
      double v = 0.0;
      for (int k = 0; k < E.rows(); ++k) {
        if (c[k] == 0.0) continue;
        double m = c[k];
        for (int j = 0; j < n; ++j) m *= pw(E(k, j), j);
        v += m;
      }
      s2 += v * v;
    }
    lo = std::max(lo, std::sqrt(s2));
  }
  return Interval{lo, lo / (1.0 - factor)};
}

Interval sup_norm_bound(const PolynomialSystem& P, const SphereNet& net) {
  return sup_norm_bound(P.polys(), net);
}

MatrixXd tangent_basis(const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("tangent_basis: need n >= 2");
  if (std::abs(x.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("tangent_basis: point is not on the unit sphere");
  const double s = x[n - 1] >= 0.0 ? 1.0 : -1.0;
  VectorXd w = x;
  w[n - 1] += s;
  const double inv = 2.0 / w.squaredNorm();
  MatrixXd b(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    b.row(i) = -inv * w[i] * w.transpose();
    b(i, i) += 1.0;
  }
  return b;
}

VectorXd sphere_exp(const VectorXd& x, const VectorXd& w) {
  const double t = w.norm();
  if (t < 1e-14) {
    VectorXd y = x + w;
    return y / y.norm();
  }
  VectorXd y = std::cos(t) * x + (std::sin(t) / t) * w;
  return y / y.norm();
}

VectorXd refine_on_sphere(const std::function<double(const VectorXd&)>& f,
                          const VectorXd& start, int iters) {
  VectorXd x = start / start.norm();
  double fx = f(x);
  const int n = static_cast<int>(x.size());
  const double h = 1e-6;

  // gradient phase on whatever smoothness is there
  double step = 0.05;
  for (int it = 0; it < iters && step > 1e-13; ++it) {
    MatrixXd b = tangent_basis(x);
    VectorXd g(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      double fp = f(sphere_exp(x, h * b.row(i).transpose()));
      double fm = f(sphere_exp(x, -h * b.row(i).transpose()));
      g[i] = (fp - fm) / (2.0 * h);
    }
    double gn = g.norm();
    if (gn < 1e-12) break;
    VectorXd dir = (-b.transpose() * g) / gn;
    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 40; ++bt) {
      VectorXd y = sphere_exp(x, t * dir);
      double fy = f(y);
      if (fy <= fx - 1e-4 * t * gn) {
        x = y;
        fx = fy;
        step = std::min(0.5, 2.0 * t);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) step *= 0.25;
  }

  // pattern polish; robust at singular-value crossings and conical minima
  double s = 1e-3;
  int budget = std::max(8, 4 * iters);
  while (budget > 0 && s > 1e-13) {
    MatrixXd b = tangent_basis(x);
    int best = -1;
    double bestf = fx;
    for (int i = 0; i < 2 * (n - 1) && budget > 0; ++i, --budget) {
      double sign = (i % 2 == 0) ? 1.0 : -1.0;
      VectorXd y = sphere_exp(x, sign * s * b.row(i / 2).transpose());
      double fy = f(y);
      if (fy < bestf) {
        bestf = fy;
        best = i;
      }
    }
    if (best >= 0) {
      double sign = (best % 2 == 0) ? 1.0 : -1.0;
      x = sphere_exp(x, sign * s * b.row(best / 2).transpose());
      fx = bestf;
      s *= 1.6;
    } else {
      s *= 0.5;
    }
  }
  return x;
}

MinimizeResult minimize_on_sphere(const std::function<double(const VectorXd&)>& objective,
                                  double lipschitz_chord, const SphereNet& net,
                                  int refine_iters, int starts, std::uint64_t seed,
                                  bool nonnegative) {
  if (net.size() < 1) throw std::invalid_argument("minimize_on_sphere: empty net");
  VectorXd vals(net.size());
  VectorXd x(net.n);
  for (int i = 0; i < net.size(); ++i) {
    x = net.points.row(i).transpose();
    vals[i] = objective(x);
    if (!std::isfinite(vals[i]))
      throw std::invalid_argument("minimize_on_sphere: objective not finite on the net");
  }
  int net_arg = 0;
  double net_min = vals.minCoeff(&net_arg);

  MinimizeResult res;
  res.value_hi = net_min;
  res.argmin = net.points.row(net_arg).transpose();

  if (refine_iters > 0 && starts > 0) {
    std::vector<int> order(net.size());
    for (int i = 0; i < net.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return vals[a] != vals[b] ? vals[a] < vals[b] : a < b;
    });
    RngStream rng(seed, 0x5157ULL);
    std::vector<int> chosen;
    int best_k = std::max(1, starts / 2);
    for (int i = 0; i < best_k && i < net.size(); ++i) chosen.push_back(order[i]);
    while (static_cast<int>(chosen.size()) < starts)
      chosen.push_back(static_cast<int>(rng.next_u64() % net.size()));
    for (int idx : chosen) {
      VectorXd xr = refine_on_sphere(objective, net.points.row(idx).transpose(), refine_iters);
      double fr = objective(xr);
      if (fr < res.value_hi) {
        res.value_hi = fr;
        res.argmin = xr;
      }
    }
  }

  res.value_lo = net_min - lipschitz_chord * net.delta_achieved;
  if (nonnegative) res.value_lo = std::max(0.0, res.value_lo);
  res.value_lo = std::min(res.value_lo, res.value_hi);
  return res;
}

namespace {

struct Cell {
  std::array<double, 8> c{};
  double r = 0.0;   // arc radius
  double val = 0.0;
  double lb = 0.0;
  std::uint64_t id = 0;
};

struct CellCmp {
  bool operator()(const Cell& a, const Cell& b) const {
    if (a.lb != b.lb) return a.lb > b.lb;  // min-heap on lb
    return a.id > b.id;
  }
};

// min over theta in [0, r] of  v - a*theta + (b/2)*theta^2 - (t3/6)*theta^3
double cubic_lower(double v, double a, double b, double t3, double r) {
  auto q = [&](double th) { return v - a * th + 0.5 * b * th * th - t3 / 6.0 * th * th * th; };
  double best = std::min(q(0.0), q(r));
  // stationary points of q: -a + b*theta - (t3/2)*theta^2 = 0
  if (t3 > 0.0) {
    double disc = b * b - 2.0 * a * t3;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      for (double th : {(b - sq) / t3, (b + sq) / t3})
        if (th > 0.0 && th < r) best = std::min(best, q(th));
    }
  } else if (b > 0.0 && a / b < r) {
    double th = a / b;
    if (th > 0.0) best = std::min(best, q(th));
  }
  return best;
}

}  // namespace

double quadratic_cap_bound(const VectorXd& center, double r, double value,
                           const VectorXd& grad, const MatrixXd& hess, double third_bound) {
  MatrixXd b = tangent_basis(center);
  VectorXd gt = b * grad;
  MatrixXd ht = b * hess * b.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(ht, Eigen::EigenvaluesOnly);
  // second geodesic derivative at the center: u^T Hess u - <grad, center>
  const double lam_eff = es.eigenvalues().minCoeff() - grad.dot(center);
  return cubic_lower(value, gt.norm(), lam_eff, third_bound, r);
}

namespace {

// offsets of the child lattice, scaled by h = r/sqrt(n-1); covering radius r/2
const std::vector<Eigen::VectorXi>& child_offsets(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<Eigen::VectorXi>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int m = n - 1;
  const double lim = 1.5 * std::sqrt(static_cast<double>(m));  // |k| <= 1.5*r/h
  std::vector<Eigen::VectorXi> offs;
  Eigen::VectorXi k = Eigen::VectorXi::Constant(m, -3);
  for (;;) {
    if (k.cast<double>().norm() <= lim + 1e-12) offs.push_back(k);
    int j = 0;
    for (; j < m; ++j) {
      if (++k[j] <= 3) break;
      k[j] = -3;
    }
    if (j == m) break;
  }
  return cache.emplace(n, std::move(offs)).first->second;
}

}  // namespace

CapSearchResult certified_min(const CapObjective& obj, const SphereNet& net,
                              const CapSearchOptions& opts) {
  const int n = net.n;
  if (n > 8) throw std::invalid_argument("certified_min: n > 8 not supported");

  std::uint64_t next_id = 0;
  std::size_t evals = 0;

  CapSearchResult res;
  res.hi = std::numeric_limits<double>::infinity();

  auto make_cell = [&](const VectorXd& center, double r) {
    Cell cell;
    for (int j = 0; j < n; ++j) cell.c[j] = center[j];
    cell.r = r;
    cell.val = obj.value(center);
    if (!std::isfinite(cell.val))
      throw std::invalid_argument("certified_min: objective not finite");
    cell.lb = std::max(obj.cell_lower_bound(center, r, cell.val), opts.floor);
    cell.id = next_id++;
    ++evals;
    if (cell.val < res.hi) {
      res.hi = cell.val;
      res.argmin = center;
    }
    return cell;
  };

  std::priority_queue<Cell, std::vector<Cell>, CellCmp> active;
  double resolved_lb = std::numeric_limits<double>::infinity();
  const double r0 = 2.0 * std::asin(std::min(1.0, net.delta_achieved) / 2.0);
  VectorXd center(n);
  for (int i = 0; i < net.size(); ++i) {
    center = net.points.row(i).transpose();
    active.push(make_cell(center, r0));
  }

  auto current_lo = [&]() {
    double lo = resolved_lb;
    if (!active.empty()) lo = std::min(lo, active.top().lb);
    return std::min(lo, res.hi);
  };

  auto done = [&](double lo) {
    if (lo >= opts.lb_stop) return true;
    double width = res.hi - lo;
    if (opts.width_abs > 0.0 && width <= opts.width_abs) return true;
    if (opts.width_rel > 0.0 && width <= opts.width_rel * std::max(std::abs(res.hi), std::abs(lo)))
      return true;
    return false;
  };

  const auto& offs = child_offsets(n);
  VectorXd w(n), ccenter(n);
  while (!active.empty()) {
    if (done(current_lo())) break;
    if (evals >= opts.max_cells) {
      res.budget_exhausted = true;
      break;
    }
    Cell cell = active.top();
    active.pop();
    if (cell.lb >= res.hi || cell.r <= opts.min_radius) {
      resolved_lb = std::min(resolved_lb, cell.lb);
      continue;
    }
    for (int j = 0; j < n; ++j) center[j] = cell.c[j];
    MatrixXd b = tangent_basis(center);
    const double h = cell.r / std::sqrt(static_cast<double>(n - 1));
    for (const auto& k : offs) {
      w.setZero();
      for (int i = 0; i < n - 1; ++i)
        if (k[i] != 0) w += (h * k[i]) * b.row(i).transpose();
      ccenter = sphere_exp(center, w);
      Cell child = make_cell(ccenter, 0.5 * cell.r);
      if (child.lb < res.hi) active.push(child);
      else resolved_lb = std::min(resolved_lb, child.lb);
    }
  }

  if (opts.refine_iters > 0) {
    auto f = [&](const VectorXd& x) { return obj.value(x); };
    VectorXd xr = refine_on_sphere(f, res.argmin, opts.refine_iters);
    double fr = obj.value(xr);
    if (fr < res.hi) {
      res.hi = fr;
      res.argmin = xr;
    }
  }

  res.lo = std::min(std::max(current_lo(), opts.floor), res.hi);
  res.cells = evals;
  return res;
}

}  // namespace polycond
