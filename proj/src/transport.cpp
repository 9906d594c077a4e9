#include "varwass/transport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "varwass/error.hpp"

namespace varwass {

// ---------------------------------------------------------------------------
// Cost tensors and couplings
// ---------------------------------------------------------------------------

CostMatrix::CostMatrix(std::size_t n, double h,
                       std::vector<double> source_exponent,
                       std::vector<double> entries)
    : n_(n), h_(h), p_(std::move(source_exponent)), c_(std::move(entries)) {
  if (c_.size() != n_ * n_ || p_.size() != n_) {
    throw Error(ErrorCode::size_mismatch, "cost matrix shape");
  }
}

double CostMatrix::median() const {
  std::vector<double> tmp = c_;
  const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  return *mid;
}

CostMatrix build_cost(const Grid& g, const ExponentField& p, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::nonpositive_h, "time step h must be positive");
  }
  if (p.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "exponent/grid size mismatch");
  }
  const std::size_t n = g.n_cells();
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = p[i];
    const double scale = 1.0 / (std::pow(h, pi - 1.0) * pi);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      c[i * n + j] = std::pow(std::abs(g.center(i) - g.center(j)), pi) * scale;
    }
  }
  return CostMatrix(n, h, p.values().values, std::move(c));
}

CostMatrix build_power_cost(const Grid& g, double r) {
  return build_cost(g, ExponentField::constant(g.n_cells(), r), 1.0);
}

double Coupling::marginal_violation() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += gamma[i * n + j];
    worst = std::max(worst, std::abs(row - row_marginal[i]));
  }
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += gamma[i * n + j];
    worst = std::max(worst, std::abs(col - col_marginal[j]));
  }
  return worst;
}

double Coupling::cost(const CostMatrix& c) const {
  double s = 0.0;
  for (std::size_t k = 0; k < gamma.size(); ++k) s += c.entries()[k] * gamma[k];
  return s;
}

double ExactTransport::dual_violation(const CostMatrix& c,
                                      double support_tol) const {
  const std::size_t n = c.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double slack = c(i, j) - u[i] - v[j];
      worst = std::max(worst, -slack);
      if (coupling(i, j) > support_tol) worst = std::max(worst, std::abs(slack));
    }
  }
  return worst;
}

double ExactTransport::duality_gap(const DensityField& mu,
                                   const DensityField& nu) const {
  double dual = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) dual += u[i] * mu.mass(i);
  for (std::size_t j = 0; j < nu.size(); ++j) dual += v[j] * nu.mass(j);
  return value - dual;
}

// ---------------------------------------------------------------------------
// Transportation simplex
// ---------------------------------------------------------------------------

namespace {

void check_problem(const CostMatrix& c, const DensityField& mu,
                   const DensityField& nu) {
  if (mu.size() != c.size() || nu.size() != c.size()) {
    throw Error(ErrorCode::size_mismatch, "marginals do not match the cost");
  }
  double sm = 0.0;
  double sn = 0.0;
  for (double m : mu.mass().values) sm += m;
  for (double m : nu.mass().values) sn += m;
  if (std::abs(sm - sn) > 1e-9) {
    throw Error(ErrorCode::marginal_mismatch,
                "marginal masses differ: " + std::to_string(sm) + " vs " +
                    std::to_string(sn));
  }
}

struct BasicCell {
  std::size_t i;
  std::size_t j;
  double x;
};

class TransportSimplex {
 public:
  TransportSimplex(const CostMatrix& c, const DensityField& mu,
                   const DensityField& nu)
      : c_(c), n_(c.size()), u_(n_), v_(n_) {
    north_west_corner(mu, nu);
  }

  std::size_t run() {
    const std::size_t max_pivots = 200 * n_ * n_ + 1000;
    double cmax = 0.0;
    for (double e : c_.entries()) cmax = std::max(cmax, std::abs(e));
    const double tol = 1e-13 * std::max(cmax, 1.0);
    std::size_t degenerate_run = 0;
    std::size_t pivots = 0;
    for (; pivots < max_pivots; ++pivots) {
      compute_potentials();
      const bool bland = degenerate_run > 2 * n_;
      std::size_t ei = n_;
      std::size_t ej = n_;
      double best = -tol;
      for (std::size_t i = 0; i < n_ && !(bland && ei < n_); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          const double r = c_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      }
      if (ei == n_) break;
      const double theta = pivot(ei, ej);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    compute_potentials();
    return pivots;
  }

  Coupling coupling(const DensityField& mu, const DensityField& nu) const {
    Coupling out(n_);
    out.row_marginal = mu.mass();
    out.col_marginal = nu.mass();
    for (const auto& b : basis_) out.at(b.i, b.j) = std::max(b.x, 0.0);
    return out;
  }

  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

 private:
  void north_west_corner(const DensityField& mu, const DensityField& nu) {
    std::vector<double> a = mu.mass().values;
    std::vector<double> b = nu.mass().values;
    std::size_t i = 0;
    std::size_t j = 0;
    basis_.reserve(2 * n_ - 1);
    while (true) {
      const double q = std::min(a[i], b[j]);
      basis_.push_back({i, j, q});
      a[i] -= q;
      b[j] -= q;
      if (i == n_ - 1 && j == n_ - 1) break;
      if (j == n_ - 1 || (i < n_ - 1 && a[i] <= b[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Rows are nodes 0..n-1, columns n..2n-1; the basis is a spanning tree.
  void build_adjacency() {
    adj_.assign(2 * n_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adj_[basis_[k].i].push_back(k);
      adj_[n_ + basis_[k].j].push_back(k);
    }
  }

  void compute_potentials() {
    build_adjacency();
    std::vector<char> seen(2 * n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    u_[0] = 0.0;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adj_[node]) {
        const auto& b = basis_[k];
        const std::size_t other = node < n_ ? n_ + b.j : b.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < n_) {
          v_[b.j] = c_(b.i, b.j) - u_[b.i];
        } else {
          u_[b.i] = c_(b.i, b.j) - v_[b.j];
        }
        stack.push_back(other);
      }
    }
  }

  // Path of basic cells from row node ei to column node n+ej in the tree.
  std::vector<std::size_t> tree_path(std::size_t ei, std::size_t ej) const {
    const std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> via(2 * n_, none);
    std::vector<std::size_t> parent(2 * n_, none);
    std::vector<std::size_t> queue{ei};
    parent[ei] = ei;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == n_ + ej) break;
      for (std::size_t k : adj_[node]) {
        const auto& b = basis_[k];
        const std::size_t other = node < n_ ? n_ + b.j : b.i;
        if (parent[other] != none) continue;
        parent[other] = node;
        via[other] = k;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = n_ + ej; node != ei; node = parent[node]) {
      path.push_back(via[node]);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  double pivot(std::size_t ei, std::size_t ej) {
    const auto path = tree_path(ei, ej);
    // Along the cycle entering(+), path[0](-), path[1](+), ...
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = path.size();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto& b = basis_[path[k]];
      const double x = b.x;
      const bool better =
          x < theta ||
          (x == theta && b.i * n_ + b.j < basis_[path[leave]].i * n_ +
                                              basis_[path[leave]].j);
      if (better) {
        theta = x;
        leave = k;
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      auto& b = basis_[path[k]];
      b.x += (k % 2 == 0) ? -theta : theta;
      if (b.x < 0.0) b.x = 0.0;
    }
    basis_[path[leave]] = {ei, ej, theta};
    return theta;
  }

  const CostMatrix& c_;
  std::size_t n_;
  std::vector<BasicCell> basis_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_;
  std::vector<double> v_;
};

double log_sum_exp(const double* values, std::size_t count) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) mx = std::max(mx, values[k]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < count; ++k) s += std::exp(values[k] - mx);
  return mx + std::log(s);
}

}  // namespace

ExactTransport solve_exact(const CostMatrix& c, const DensityField& mu,
                           const DensityField& nu) {
  check_problem(c, mu, nu);
  TransportSimplex simplex(c, mu, nu);
  ExactTransport out;
  out.pivots = simplex.run();
  out.coupling = simplex.coupling(mu, nu);
  out.value = out.coupling.cost(c);
  out.u = simplex.u();
  out.v = simplex.v();
  return out;
}

namespace {

// Flow on a candidate basis (2n-1 cells) by peeling degree-one nodes. Returns
// false when the cells contain a cycle.
bool basis_flow(const std::vector<std::size_t>& cells, std::size_t n,
                std::vector<double> supply, std::vector<double>& flow) {
  const std::size_t nodes = 2 * n;
  std::vector<int> degree(nodes, 0);
  std::vector<bool> used(cells.size(), false);
  for (std::size_t k : cells) {
    ++degree[k / n];
    ++degree[n + k % n];
  }
  flow.assign(cells.size(), 0.0);
  for (std::size_t done = 0; done < cells.size(); ++done) {
    std::size_t pick = cells.size();
    std::size_t leaf = 0;
    for (std::size_t e = 0; e < cells.size() && pick == cells.size(); ++e) {
      if (used[e]) continue;
      const std::size_t r = cells[e] / n;
      const std::size_t col = n + cells[e] % n;
      if (degree[r] == 1) {
        pick = e;
        leaf = r;
      } else if (degree[col] == 1) {
        pick = e;
        leaf = col;
      }
    }
    if (pick == cells.size()) return false;
    const std::size_t r = cells[pick] / n;
    const std::size_t col = n + cells[pick] % n;
    const std::size_t other = leaf == r ? col : r;
    flow[pick] = supply[leaf];
    supply[other] -= supply[leaf];
    supply[leaf] = 0.0;
    used[pick] = true;
    --degree[r];
    --degree[col];
  }
  return true;
}

}  // namespace

ExactTransport solve_vertex_enumeration(const CostMatrix& c,
                                        const DensityField& mu,
                                        const DensityField& nu) {
  check_problem(c, mu, nu);
  const std::size_t n = c.size();
  if (n > kVertexEnumerationLimit) {
    throw Error(ErrorCode::invalid_argument,
                "vertex enumeration is limited to " +
                    std::to_string(kVertexEnumerationLimit) + " points");
  }
  std::vector<double> supply(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    supply[i] = mu.mass(i);
    supply[n + i] = nu.mass(i);
  }
  const std::size_t cells = n * n;
  const std::size_t basis = 2 * n - 1;
  std::vector<std::size_t> pick(basis);
  for (std::size_t k = 0; k < basis; ++k) pick[k] = k;
  std::vector<double> flow;
  ExactTransport best;
  best.value = std::numeric_limits<double>::infinity();
  while (true) {
    if (basis_flow(pick, n, supply, flow) &&
        *std::min_element(flow.begin(), flow.end()) >= -1e-12) {
      double value = 0.0;
      for (std::size_t e = 0; e < basis; ++e) {
        value += c.entries()[pick[e]] * std::max(flow[e], 0.0);
      }
      if (value < best.value) {
        best.value = value;
        best.coupling = Coupling(n);
        best.coupling.row_marginal = mu.mass();
        best.coupling.col_marginal = nu.mass();
        for (std::size_t e = 0; e < basis; ++e) {
          best.coupling.gamma[pick[e]] = std::max(flow[e], 0.0);
        }
      }
    }
    // Next combination in lexicographic order.
    std::size_t k = basis;
    while (k > 0 && pick[k - 1] == cells - basis + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t j = k; j < basis; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Entropic solver
// ---------------------------------------------------------------------------

EntropicTransport solve_entropic(const CostMatrix& c, const DensityField& mu,
                                 const DensityField& nu, double eps,
                                 const EntropicOptions& opts) {
  check_problem(c, mu, nu);
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::nonpositive_eps, "entropic solver needs eps > 0");
  }
  const std::size_t n = c.size();
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (mu.mass(i) > 0.0) rows.push_back(i);
    if (nu.mass(i) > 0.0) cols.push_back(i);
  }
  std::vector<double> f(n, ninf);
  std::vector<double> gpot(n, ninf);
  for (std::size_t j : cols) gpot[j] = 0.0;
  std::vector<double> buf(n);

  // f = c-transform of g, so rows hold exactly and only columns can be off.
  auto update_f = [&]() {
    for (std::size_t i : rows) {
      std::size_t m = 0;
      for (std::size_t j : cols) buf[m++] = (gpot[j] - c(i, j)) / eps;
      f[i] = eps * (std::log(mu.mass(i)) - log_sum_exp(buf.data(), m));
    }
  };
  auto update_g = [&]() {
    for (std::size_t j : cols) {
      std::size_t m = 0;
      for (std::size_t i : rows) buf[m++] = (f[i] - c(i, j)) / eps;
      gpot[j] = eps * (std::log(nu.mass(j)) - log_sum_exp(buf.data(), m));
    }
  };
  auto plan = [&](std::size_t i, std::size_t j) {
    return std::exp((f[i] + gpot[j] - c(i, j)) / eps);
  };
  auto column_violation = [&]() {
    double viol = 0.0;
    for (std::size_t j : cols) {
      double col = 0.0;
      for (std::size_t i : rows) col += plan(i, j);
      viol += std::abs(col - nu.mass(j));
    }
    return viol;
  };
  // Semi-dual objective in g, concave.
  auto semi_dual = [&]() {
    double v = 0.0;
    for (std::size_t i : rows) v += mu.mass(i) * f[i];
    for (std::size_t j : cols) v += nu.mass(j) * gpot[j];
    return v;
  };

  // Damped Newton on g; only worthwhile once sweeps are near the optimum,
  // where Sinkhorn itself slows to a crawl for small eps.
  const std::size_t m = cols.size();
  auto newton_step = [&]() {
    Eigen::VectorXd grad(m);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                 static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) grad[a] = nu.mass(cols[a]);
    Eigen::VectorXd row(m);
    for (std::size_t i : rows) {
      for (std::size_t a = 0; a < m; ++a) row[a] = plan(i, cols[a]);
      grad -= row;
      hess.diagonal() += row;
      hess.noalias() -= row * row.transpose() / mu.mass(i);
    }
    hess /= eps;
    // The constant shift of g is a null direction; pin it.
    hess.array() += hess.diagonal().mean() / static_cast<double>(m);
    const Eigen::VectorXd dir = hess.ldlt().solve(grad);
    const double slope = grad.dot(dir);
    if (!dir.allFinite() || !(slope > 0.0)) return false;
    const std::vector<double> g0 = gpot;
    const double obj0 = semi_dual();
    for (double t = 1.0; t > 1e-10; t *= 0.5) {
      for (std::size_t a = 0; a < m; ++a) gpot[cols[a]] = g0[cols[a]] + t * dir[a];
      update_f();
      if (semi_dual() >= obj0 + 1e-4 * t * slope) return true;
    }
    gpot = g0;
    update_f();
    return false;
  };

  EntropicTransport out;
  update_f();
  out.marginal_violation = column_violation();
  const std::size_t block = 200;
  while (out.marginal_violation >= opts.tolerance && out.iterations < opts.max_iterations) {
    for (std::size_t k = 0; k < block && out.iterations < opts.max_iterations; ++k) {
      update_g();
      update_f();
      ++out.iterations;
      out.marginal_violation = column_violation();
      if (out.marginal_violation < opts.tolerance) break;
    }
    if (out.marginal_violation < opts.tolerance || out.marginal_violation > 1e-2) continue;
    for (int k = 0; k < 50 && out.iterations < opts.max_iterations; ++k) {
      ++out.iterations;
      if (!newton_step()) break;
      out.marginal_violation = column_violation();
      if (out.marginal_violation < opts.tolerance) break;
    }
  }
  out.converged = out.marginal_violation < opts.tolerance;

  out.coupling = Coupling(n);
  out.coupling.row_marginal = mu.mass();
  out.coupling.col_marginal = nu.mass();
  for (std::size_t i : rows) {
    for (std::size_t j : cols) out.coupling.at(i, j) = plan(i, j);
  }
  out.value = out.coupling.cost(c);
  return out;
}

// ---------------------------------------------------------------------------
// One-dimensional monotone pairings
// ---------------------------------------------------------------------------

namespace {

// A maximal interval of quantile levels on which both the source cell and
// the target cell are fixed.
struct Segment {
  double s0;
  double s1;
  std::size_t i;
  std::size_t j;
};

struct Pairing {
  std::vector<Segment> segments;
  std::vector<double> a_start;  // quantile level where source cell i begins
  std::vector<double> b_start;  // same for target cells
};

Pairing pair_quantiles(const DensityField& mu, const DensityField& nu) {
  const std::size_t n = mu.size();
  if (nu.size() != n) {
    throw Error(ErrorCode::size_mismatch, "marginal sizes differ");
  }
  Pairing out;
  out.a_start.resize(n + 1);
  out.b_start.resize(n + 1);
  out.a_start[0] = 0.0;
  out.b_start[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.a_start[k + 1] = out.a_start[k] + mu.mass(k);
    out.b_start[k + 1] = out.b_start[k] + nu.mass(k);
  }
  // The two totals agree to ~1e-12; treat the shorter one as ending where the
  // longer one does.
  auto next_nonempty = [n](const DensityField& d, std::size_t k) {
    while (k < n && d.mass(k) == 0.0) ++k;
    return k;
  };
  auto last_nonempty = [n](const DensityField& d) {
    std::size_t k = n;
    while (k > 0 && d.mass(k - 1) == 0.0) --k;
    return k - 1;
  };
  const std::size_t i_last = last_nonempty(mu);
  const std::size_t j_last = last_nonempty(nu);
  std::size_t i = next_nonempty(mu, 0);
  std::size_t j = next_nonempty(nu, 0);
  double s = 0.0;
  out.segments.reserve(2 * n);
  while (i < n && j < n) {
    const double a_end = i == i_last ? std::numeric_limits<double>::infinity()
                                     : out.a_start[i + 1];
    const double b_end = j == j_last ? std::numeric_limits<double>::infinity()
                                     : out.b_start[j + 1];
    double s1 = std::min(a_end, b_end);
    const bool done = !std::isfinite(s1);
    if (done) s1 = std::max(out.a_start[i_last + 1], out.b_start[j_last + 1]);
    if (s1 > s) out.segments.push_back({s, s1, i, j});
    if (done) break;
    s = std::max(s, s1);
    if (a_end <= s1) i = next_nonempty(mu, i + 1);
    if (b_end <= s1) j = next_nonempty(nu, j + 1);
  }
  return out;
}

// Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// Integrals over t in [ta, tb] of
//   cost    = |u(t)|^p
//   slope   = |u(t)|^{p-1} sign u(t)
//   moment  = t |u(t)|^{p-1} sign u(t)
// for u(t) = ua + k (t - ta) with u of one sign on the interval.
struct PowerIntegrals {
  double cost = 0.0;
  double slope = 0.0;
  double moment = 0.0;
};

PowerIntegrals one_sign_integrals(double ta, double tb, double ua, double ub,
                                  double p) {
  PowerIntegrals r;
  const double len = tb - ta;
  if (len <= 0.0) return r;
  const double sigma = (ua + ub) >= 0.0 ? 1.0 : -1.0;
  const double wa = std::abs(ua);
  const double wb = std::abs(ub);
  const double wmax = std::max(wa, wb);
  if (wmax == 0.0) return r;
  if (std::abs(wb - wa) <= 0.25 * wmax) {
    const double mid = 0.5 * (ta + tb);
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
      const double t = mid + 0.5 * len * kGlNodes[k];
      const double w = wa + (wb - wa) * (t - ta) / len;
      const double wt = 0.5 * len * kGlWeights[k];
      const double wp1 = std::pow(w, p - 1.0);
      r.cost += wt * wp1 * w;
      r.slope += wt * wp1;
      r.moment += wt * t * wp1;
    }
  } else {
    const double k = (wb - wa) / len;
    const double a1 = std::pow(wa, p);
    const double b1 = std::pow(wb, p);
    const double a2 = a1 * wa;
    const double b2 = b1 * wb;
    r.cost = (b2 - a2) / ((p + 1.0) * k);
    r.slope = (b1 - a1) / (p * k);
    const double offset_moment =
        ((b2 - a2) / (p + 1.0) - wa * (b1 - a1) / p) / (k * k);
    r.moment = ta * r.slope + offset_moment;
  }
  r.slope *= sigma;
  r.moment *= sigma;
  return r;
}

PowerIntegrals linear_power_integrals(double t0, double t1, double u0,
                                      double u1, double p) {
  if ((u0 < 0.0 && u1 > 0.0) || (u0 > 0.0 && u1 < 0.0)) {
    const double tz = t0 + (t1 - t0) * u0 / (u0 - u1);
    const PowerIntegrals left = one_sign_integrals(t0, tz, u0, 0.0, p);
    const PowerIntegrals right = one_sign_integrals(tz, t1, 0.0, u1, p);
    return {left.cost + right.cost, left.slope + right.slope,
            left.moment + right.moment};
  }
  return one_sign_integrals(t0, t1, u0, u1, p);
}

double quantile_at(double s, double start, double mass, double edge,
                   double dx) {
  return edge + (s - start) * dx / mass;
}

}  // namespace

Coupling monotone_coupling(const DensityField& mu, const DensityField& nu) {
  const Pairing pr = pair_quantiles(mu, nu);
  Coupling out(mu.size());
  out.row_marginal = mu.mass();
  out.col_marginal = nu.mass();
  for (const auto& seg : pr.segments) out.at(seg.i, seg.j) += seg.s1 - seg.s0;
  return out;
}

double wasserstein_1d(double r, const DensityField& mu, const DensityField& nu,
                      const Grid& g) {
  if (!(r > 1.0)) {
    throw Error(ErrorCode::exponent_out_of_range, "wasserstein_1d needs r > 1");
  }
  if (mu.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "density/grid size mismatch");
  }
  const Pairing pr = pair_quantiles(mu, nu);
  double s = 0.0;
  for (const auto& seg : pr.segments) {
    const double d = std::abs(g.center(seg.i) - g.center(seg.j));
    if (d > 0.0) s += (seg.s1 - seg.s0) * std::pow(d, r);
  }
  return std::pow(s, 1.0 / r);
}

namespace {

ContinuousCost continuous_cost_impl(const DensityField& mu,
                                    const DensityField& nu,
                                    const ExponentField& p, double h,
                                    const Grid& g, bool want_gradient) {
  if (!(h > 0.0)) {
    throw Error(ErrorCode::nonpositive_h, "time step h must be positive");
  }
  const std::size_t n = g.n_cells();
  if (mu.size() != n || nu.size() != n || p.size() != n) {
    throw Error(ErrorCode::size_mismatch, "field sizes do not match the grid");
  }
  const double dx = g.dx();
  const Pairing pr = pair_quantiles(mu, nu);
  ContinuousCost out;
  std::vector<double> through(n, 0.0);  // (dx/n_j) int d_y c ds
  std::vector<double> self(n, 0.0);     // (dx/n_j^2) int (s - B_j) d_y c ds
  for (const auto& seg : pr.segments) {
    const double pi = p[seg.i];
    const double hp = std::pow(h, pi - 1.0);
    const double mi = mu.mass(seg.i);
    const double nj = nu.mass(seg.j);
    const double x0 = quantile_at(seg.s0, pr.a_start[seg.i], mi, g.face(seg.i), dx);
    const double x1 = quantile_at(seg.s1, pr.a_start[seg.i], mi, g.face(seg.i), dx);
    const double y0 = quantile_at(seg.s0, pr.b_start[seg.j], nj, g.face(seg.j), dx);
    const double y1 = quantile_at(seg.s1, pr.b_start[seg.j], nj, g.face(seg.j), dx);
    const PowerIntegrals ints =
        linear_power_integrals(seg.s0, seg.s1, y0 - x0, y1 - x1, pi);
    out.value += ints.cost / (hp * pi);
    if (want_gradient) {
      // d_y c = |y - x|^{p-1} sign(y - x) / h^{p-1}
      through[seg.j] += dx / nj * ints.slope / hp;
      self[seg.j] += dx / (nj * nj) *
                     (ints.moment - pr.b_start[seg.j] * ints.slope) / hp;
    }
  }
  if (want_gradient) {
    out.gradient.assign(n, 0.0);
    double suffix = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      out.gradient[k] = -suffix - self[k];
      suffix += through[k];
    }
  }
  return out;
}

}  // namespace

double continuous_transport_cost(const DensityField& mu,
                                 const DensityField& nu,
                                 const ExponentField& p, double h,
                                 const Grid& g) {
  return continuous_cost_impl(mu, nu, p, h, g, false).value;
}

ContinuousCost continuous_transport_cost_with_gradient(
    const DensityField& mu, const DensityField& nu, const ExponentField& p,
    double h, const Grid& g) {
  return continuous_cost_impl(mu, nu, p, h, g, true);
}

CellField continuous_mean_displacement(const DensityField& mu,
                                       const DensityField& nu, const Grid& g) {
  const std::size_t n = g.n_cells();
  const double dx = g.dx();
  const Pairing pr = pair_quantiles(mu, nu);
  CellField d(n);
  for (const auto& seg : pr.segments) {
    const double mi = mu.mass(seg.i);
    const double nj = nu.mass(seg.j);
    const double smid = 0.5 * (seg.s0 + seg.s1);
    const double x = quantile_at(smid, pr.a_start[seg.i], mi, g.face(seg.i), dx);
    const double y = quantile_at(smid, pr.b_start[seg.j], nj, g.face(seg.j), dx);
    d[seg.i] += (seg.s1 - seg.s0) * (y - x);
  }
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = mu.mass(i) > 0.0 ? d[i] / mu.mass(i) : 0.0;
  }
  return d;
}

DensityField displacement_interpolation(const DensityField& mu,
                                        const DensityField& nu, double t,
                                        const Grid& g) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::invalid_argument,
                "interpolation parameter must lie in [0, 1]");
  }
  const std::size_t n = g.n_cells();
  const double dx = g.dx();
  const Pairing pr = pair_quantiles(mu, nu);
  struct Piece {
    double s0, s1, z0, z1;
  };
  std::vector<Piece> pieces;
  pieces.reserve(pr.segments.size());
  for (const auto& seg : pr.segments) {
    const double mi = mu.mass(seg.i);
    const double nj = nu.mass(seg.j);
    auto z = [&](double s) {
      const double x = quantile_at(s, pr.a_start[seg.i], mi, g.face(seg.i), dx);
      const double y = quantile_at(s, pr.b_start[seg.j], nj, g.face(seg.j), dx);
      return (1.0 - t) * x + t * y;
    };
    pieces.push_back({seg.s0, seg.s1, z(seg.s0), z(seg.s1)});
  }
  // CDF of the interpolant at each interior face.
  std::vector<double> cdf(n + 1, 0.0);
  cdf[n] = 1.0;
  std::size_t k = 0;
  for (std::size_t f = 1; f < n; ++f) {
    const double e = g.face(f);
    while (k < pieces.size() && pieces[k].z1 < e) ++k;
    if (k == pieces.size()) {
      cdf[f] = 1.0;
    } else if (e <= pieces[k].z0) {
      cdf[f] = pieces[k].s0;
    } else {
      const auto& pc = pieces[k];
      cdf[f] = pc.s0 + (pc.s1 - pc.s0) * (e - pc.z0) / (pc.z1 - pc.z0);
    }
  }
  CellField m(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = std::max(cdf[i + 1] - cdf[i], 0.0);
    total += m[i];
  }
  for (auto& v : m.values) v /= total;
  return DensityField(std::move(m));
}

double wasserstein_continuous(double r, const DensityField& mu,
                              const DensityField& nu, const Grid& g) {
  const double cost = continuous_transport_cost(
      mu, nu, ExponentField::constant(g.n_cells(), r), 1.0, g);
  return std::pow(r * cost, 1.0 / r);
}

}  // namespace varwass
