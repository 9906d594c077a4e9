// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "varwass/energy.hpp"
#include "varwass/finsler.hpp"
#include "varwass/jko.hpp"
#include "varwass/pde.hpp"
#include "varwass/transport.hpp"
#include "varwass/varexp.hpp"

using namespace varwass;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double l1_distance(const DensityField& a, const DensityField& b) {
  return testutil::l1_mass(a, b);
}

double cosine_amplitude(const DensityField& rho, const Grid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    s += rho.density(i, g) * std::cos(M_PI * g.center(i)) * g.dx();
  }
  return 2.0 * s;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1] + 1e-13 * std::max(1.0, std::abs(v[k - 1]))) return false;
  }
  return true;
}

std::vector<double> energies_of(const Trajectory& t, const EnergyModel& e, const Grid& g) {
  std::vector<double> out;
  for (const DensityField& s : t.states) out.push_back(total_energy(s, e, g));
  return out;
}

ExponentField affine_exponent(const Grid& g, double p0, double p1) {
  CellField p(g.n_cells());
  for (std::size_t i = 0; i < g.n_cells(); ++i) p[i] = p0 + p1 * g.center(i);
  return ExponentField(std::move(p));
}

TangentVector zero_mean_tangent(std::mt19937_64& rng, const Grid& g) {
  CellField nu = testutil::random_cell_field(rng, g.n_cells());
  const double mean = integrate(nu, g) / g.length();
  for (double& v : nu.values) v -= mean;
  return {nu};
}

// Cross-validation of the JKO flow against the explicit solver on [0,1].
Outcome cross_validate(EnergyKind kind, bool check_heat_mode) {
  const Grid g = make_grid(0.0, 1.0, 64);
  const DensityField rho0 = testutil::cosine_bump(g);
  const EnergyModel e = builtin_energy(kind);
  const ExponentField p = ExponentField::constant(64, 2.0);
  const double t_end = 0.02;
  const Trajectory jko = run_flow(rho0, e, p, 2e-4, t_end, g);
  pde::PdeConfig cfg;
  cfg.t_end = t_end;
  cfg.output_dt = 1e-3;
  const Trajectory ref = pde::solve(rho0, e, p, cfg, g);
  const double err = l1_distance(jko.states.back(), ref.states.back());
  Outcome o;
  o.pass = err <= 5e-2;
  o.detail = fmt("L1 error at T %.3e (<= 5e-2)", err);
  if (check_heat_mode) {
    const double ratio = cosine_amplitude(ref.states.back(), g) / cosine_amplitude(rho0, g);
    const double rel = std::abs(ratio / std::exp(-M_PI * M_PI * t_end) - 1.0);
    o.pass = o.pass && rel <= 0.1;
    o.detail += fmt(", cosine mode off by %.3e (<= 0.1)", rel);
  } else {
    const bool mono = nonincreasing(energies_of(jko, e, g)) && nonincreasing(energies_of(ref, e, g));
    o.pass = o.pass && mono;
    o.detail += mono ? ", both energies nonincreasing" : ", energy increased";
  }
  return o;
}

Outcome criterion1() { return cross_validate(EnergyKind::entropy, true); }

Outcome criterion2() { return cross_validate(EnergyKind::quadratic, false); }

Outcome criterion3() {
  const Grid g = make_grid(0.0, 1.0, 32);
  const ExponentField p = affine_exponent(g, 2.0, 1.0);
  const EnergyModel e = builtin_energy(EnergyKind::entropy);
  const DensityField rho0 = testutil::cosine_bump(g);
  const double h = 1e-3;
  const Trajectory t = run_flow(rho0, e, p, h, 50 * h, g);
  double mass_err = 0.0;
  double max_ratio = 0.0;
  for (const DensityField& s : t.states) {
    double m = 0.0;
    for (double v : s.mass().values) m += v;
    mass_err = std::max(mass_err, std::abs(m - 1.0));
    max_ratio = std::max(max_ratio, s.max_density(g) / rho0.max_density(g));
  }
  const DissipationReport d = dissipation_check(t, e, p, h, g);
  const double el_h = jko_step(rho0, e, p, h, g).el_residual;
  const double el_half = jko_step(rho0, e, p, 0.5 * h, g).el_residual;
  Outcome o;
  o.pass = t.size() == 51 && mass_err <= 1e-9 && max_ratio <= 1.0 + 1e-6 &&
           d.worst_slack >= -1e-6 && el_half <= 0.75 * el_h;
  o.detail = fmt("mass error %.2e, max density ratio %.9f, worst slack %.2e, el ratio %.3f",
                 mass_err, max_ratio, d.worst_slack, el_half / el_h);
  return o;
}

// Random unit-mass density on [0,1] whose maximum is exactly m2, attained in
// one randomly chosen cell.
DensityField spiked_density(std::mt19937_64& rng, const Grid& g, double m2) {
  const std::size_t n = g.n_cells();
  const std::size_t spike = rng() % n;
  std::vector<double> r(n);
  double rest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == spike) continue;
    r[i] = testutil::uniform(rng, 0.5, 1.0);
    rest += r[i];
  }
  const double scale = (1.0 - m2 * g.dx()) / (rest * g.dx());
  for (std::size_t i = 0; i < n; ++i) r[i] = i == spike ? m2 : r[i] * scale;
  return DensityField::from_density(r, g);
}

Outcome criterion4() {
  std::mt19937_64 rng(4004);
  const Grid g = make_grid(0.0, 1.0, 32);
  const std::vector<EnergyModel> energies = {builtin_energy(EnergyKind::quadratic),
                                             builtin_energy(EnergyKind::entropy),
                                             builtin_energy(EnergyKind::power, 3.0)};
  double worst = -1.0;
  int runs = 0;
  for (double m2 : {1.5, 3.0, 10.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const DensityField rho0 = spiked_density(rng, g, m2);
      const ExponentField p = testutil::random_exponent(rng, 32, 1.5, 2.5);
      const double bound = rho0.max_density(g);
      const Trajectory t = run_flow(rho0, energies[trial % 3], p, 1e-3, 1e-2, g);
      for (const DensityField& s : t.states) {
        worst = std::max(worst, s.max_density(g) / bound - 1.0);
      }
      ++runs;
    }
  }
  Outcome o;
  o.pass = worst <= 1e-6;
  o.detail = fmt("%g runs, worst relative excess over M2 %.2e (<= 1e-6)", runs, worst);
  return o;
}

Outcome criterion5() {
  std::mt19937_64 rng(5005);
  JkoOptions opts;
  opts.model = TransportModel::atomic;
  const std::vector<EnergyModel> energies = {builtin_energy(EnergyKind::quadratic),
                                             builtin_energy(EnergyKind::entropy),
                                             builtin_energy(EnergyKind::power, 3.0)};
  double worst = -INFINITY;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 4 + rng() % 13;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g, 0.2);
    const ExponentField p = testutil::random_exponent(rng, n, 1.5, 3.0);
    const EnergyModel& e = energies[inst % 3];
    const double h = testutil::uniform(rng, 0.02, 0.1);
    const JkoStepResult step = jko_step(rho, e, p, h, g, opts);
    const double best = step_objective(rho, step.rho_next, e, p, h, g, TransportModel::atomic);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> m(n);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = k % 2 ? testutil::uniform(rng, 0.05, 1.0)
                     : step.rho_next.mass(i) * (1.0 + 0.01 * testutil::uniform(rng, -1.0, 1.0));
        s += m[i];
      }
      for (double& v : m) v /= s;
      const double other =
          step_objective(rho, DensityField(CellField(m)), e, p, h, g, TransportModel::atomic);
      worst = std::max(worst, best - other);
    }
  }
  Outcome o;
  o.pass = worst <= 1e-7;
  o.detail = fmt("worst I(step) - I(competitor) %.2e over 2500 competitors (<= 1e-7)", worst);
  return o;
}

Outcome criterion6() {
  std::mt19937_64 rng(6006);
  double vertex_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Grid g = make_grid(0.0, 1.0, 4);
    const ExponentField p = testutil::random_exponent(rng, 4, 1.2, 4.0);
    const CostMatrix c = build_cost(g, p, testutil::uniform(rng, 0.05, 1.0));
    DensityField mu = testutil::random_density(rng, g, 0.0);
    DensityField nu = testutil::random_density(rng, g, 0.0);
    if (trial % 10 == 0) {
      mu = DensityField(CellField(std::vector<double>{0.5, 0.0, 0.25, 0.25}));
      nu = DensityField(CellField(std::vector<double>{0.25, 0.25, 0.0, 0.5}));
    }
    vertex_err = std::max(vertex_err,
                          std::abs(solve_exact(c, mu, nu).value - testutil::vertex_oracle(c, mu, nu)));
  }

  double entropic_rel = 0.0;
  bool entropic_converged = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng() % 9;
    const Grid g = make_grid(0.0, 1.0, n);
    const CostMatrix c = build_cost(g, testutil::random_exponent(rng, n, 1.5, 3.0), 0.5);
    const DensityField mu = testutil::random_density(rng, g);
    const DensityField nu = testutil::random_density(rng, g);
    const double exact = solve_exact(c, mu, nu).value;
    const EntropicTransport r = solve_entropic(c, mu, nu, 1e-3 * c.median());
    entropic_converged = entropic_converged && r.converged;
    entropic_rel = std::max(entropic_rel, std::abs(r.value - exact) / exact);
  }

  double w1d_err = 0.0;
  for (double r : {1.5, 2.0, 3.0}) {
    for (std::size_t n = 2; n <= 32; n += 3) {
      const Grid g = make_grid(0.0, 1.0, n);
      const DensityField mu = testutil::random_density(rng, g, 0.0);
      const DensityField nu = testutil::random_density(rng, g, 0.0);
      const double lp = std::pow(r * solve_exact(build_power_cost(g, r), mu, nu).value, 1.0 / r);
      w1d_err = std::max(w1d_err, std::abs(wasserstein_1d(r, mu, nu, g) - lp));
    }
  }
  Outcome o;
  o.pass = vertex_err <= 1e-9 && entropic_converged && entropic_rel <= 0.02 && w1d_err <= 1e-9;
  o.detail = fmt("vertex gap %.2e, entropic rel gap %.2e, 1-d vs LP %.2e", vertex_err,
                 entropic_rel, w1d_err);
  if (!entropic_converged) o.detail += ", entropic solve did not converge";
  return o;
}

Outcome criterion7() {
  std::mt19937_64 rng(7007);
  double unit_ball = 0.0;
  double homog = 0.0;
  double triangle = 0.0;
  int embed_fail = 0;
  int holder_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const ExponentField p = testutil::random_exponent(rng, n, 1.1, 6.0);
    const CellField u = testutil::random_cell_field(rng, n, std::exp(testutil::uniform(rng, -3.0, 3.0)));
    const CellField v = testutil::random_cell_field(rng, n, 2.0);
    const double nu = luxemburg_norm(u, rho, p, g);
    const double nv = luxemburg_norm(v, rho, p, g);
    unit_ball = std::max(unit_ball, std::abs(modular(u, rho, p, nu, g) - 1.0));

    const double c = testutil::uniform(rng, -5.0, 5.0);
    CellField cu(n);
    CellField sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      cu[i] = c * u[i];
      sum[i] = u[i] + v[i];
    }
    homog = std::max(homog, std::abs(luxemburg_norm(cu, rho, p, g) - std::abs(c) * nu) /
                                std::max(1.0, std::abs(c) * nu));
    triangle = std::max(triangle, luxemburg_norm(sum, rho, p, g) - nu - nv);

    CellField p2(n);
    for (std::size_t i = 0; i < n; ++i) p2[i] = p[i] + testutil::uniform(rng, 0.0, 4.0);
    if (luxemburg_norm(u, rho, p, g) > 2.0 * luxemburg_norm(u, rho, ExponentField(p2), g)) {
      ++embed_fail;
    }

    const ExponentField q = conjugate(p);
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) lhs += std::abs(u[i] * v[i]) * rho.mass(i);
    const double bound = (1.0 / p.p_minus() + 1.0 / q.p_minus()) * nu * luxemburg_norm(v, rho, q, g);
    if (lhs > bound) ++holder_fail;
  }
  Outcome o;
  o.pass = unit_ball <= 1e-9 && homog <= 1e-10 && triangle <= 1e-10 && embed_fail == 0 &&
           holder_fail == 0;
  o.detail = fmt("unit ball %.2e, homogeneity %.2e, triangle excess %.2e, ", unit_ball, homog,
                 triangle) +
             fmt("embedding failures %g, Hoelder failures %g", embed_fail, holder_fail);
  return o;
}

Outcome criterion8() {
  std::mt19937_64 rng(8008);
  const Grid g = make_grid(0.0, 1.0, 32);
  const EnergyModel e = builtin_energy(EnergyKind::entropy);
  pde::PdeConfig cfg;
  cfg.t_end = 0.02;
  cfg.output_dt = 1e-3;
  double worst_increase = 0.0;
  bool ordered = true;
  int pairs = 0;
  for (const ExponentField& q : {ExponentField::constant(32, 2.0), affine_exponent(g, 2.0, 1.0)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const DensityField lower = testutil::random_density(rng, g, 0.2);
      const DensityField upper = testutil::random_density(rng, g, 0.2);
      // scale * lower touches upper in one cell at t = 0
      double scale = INFINITY;
      for (std::size_t i = 0; i < 32; ++i) scale = std::min(scale, upper.mass(i) / lower.mass(i));
      const Trajectory t1 = pde::solve(lower, e, q, cfg, g);
      const Trajectory t2 = pde::solve(upper, e, q, cfg, g);
      const pde::ComparisonReport r = pde::comparison_check(t1, t2, g, 1e-9, scale, 1.0);
      ordered = ordered && r.initially_ordered && r.ordering_persists;
      for (std::size_t k = 1; k < r.positive_part.size(); ++k) {
        worst_increase = std::max(worst_increase, r.positive_part[k] - r.positive_part[k - 1]);
      }
      ++pairs;
    }
  }
  Outcome o;
  o.pass = ordered && worst_increase <= 1e-9;
  o.detail = fmt("%g ordered pairs, largest increase of the positive part %.2e (<= 1e-9)", pairs,
                 worst_increase);
  if (!ordered) o.detail += ", ordering lost";
  return o;
}

Outcome criterion9() {
  const std::size_t n = 512;
  const Grid g = make_grid(0.0, 1.0, n);
  std::vector<double> a(n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.center(i);
    a[i] = 1.0 + 0.5 * std::cos(M_PI * x);
    b[i] = 0.3 + std::exp(-20.0 * (x - 0.7) * (x - 0.7));
  }
  const DensityField mu = DensityField::from_density(a, g);
  const DensityField nu = DensityField::from_density(b, g);
  const ExponentField p = ExponentField::constant(n, 2.0);
  const double w = wasserstein_1d(2.0, mu, nu, g);
  const double coarse = curve_length(geodesic_trajectory(mu, nu, 32, g), p, g);
  const double fine = curve_length(geodesic_trajectory(mu, nu, 64, g), p, g);
  const double ratio = std::abs(coarse - w) / std::abs(fine - w);
  Outcome o;
  o.pass = coarse >= w - 5e-3 && fine >= w - 5e-3 && ratio >= 1.5;
  o.detail = fmt("W %.6f, length gap %.3e then %.3e, shrink factor %.2f (>= 1.5)", w, coarse - w,
                 fine - w, ratio);
  return o;
}

Outcome criterion10() {
  std::mt19937_64 rng(10010);
  double homog = 0.0;
  double subadd = 0.0;
  bool positive = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng() % 28;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g, 0.1);
    const ExponentField p = testutil::random_exponent(rng, n, 1.3, 4.0);
    TangentVector x = zero_mean_tangent(rng, g);
    const TangentVector y = zero_mean_tangent(rng, g);
    const double lambda = testutil::uniform(rng, 0.01, 10.0);
    const double fx = tangent_norm(rho, x, p, g);
    const double fy = tangent_norm(rho, y, p, g);
    positive = positive && fx > 0.0 && tangent_norm(rho, {CellField(n)}, p, g) == 0.0;
    TangentVector sum = x;
    for (std::size_t i = 0; i < n; ++i) sum.nu[i] += y.nu[i];
    subadd = std::max(subadd, tangent_norm(rho, sum, p, g) - fx - fy);
    for (double& v : x.nu.values) v *= lambda;
    homog = std::max(homog, std::abs(tangent_norm(rho, x, p, g) - lambda * fx) /
                                std::max(1.0, lambda * fx));
  }

  bool exact = true;
  int descents = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8 + rng() % 24;
    const Grid g = make_grid(0.0, 1.0, n);
    const EnergyModel e = builtin_energy(static_cast<EnergyKind>(trial % 3), 3.0);
    const ExponentField q = testutil::random_exponent(rng, n, 1.5, 3.0);
    const DensityField rho = testutil::random_density(rng, g, 0.1);
    const TangentVector grad = finsler_gradient(rho, e, q, g);
    const CellField r = pde::rhs(rho, e, q, g);
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      exact = exact && grad.nu[i] == -r[i];
      gmax = std::max(gmax, std::abs(grad.nu[i]));
    }
    const double tau = 1e-3 * rho.max_density(g) / gmax;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = rho.density(i, g) - tau * grad.nu[i];
    if (total_energy(DensityField::from_density(d, g), e, g) < total_energy(rho, e, g)) ++descents;
  }
  Outcome o;
  o.pass = positive && homog <= 1e-10 && subadd <= 1e-10 && exact && descents == 20;
  o.detail = fmt("homogeneity %.2e, subadditivity excess %.2e, descent %g/20", homog, subadd,
                 descents);
  if (!positive) o.detail += ", positivity failed";
  if (!exact) o.detail += ", gradient differs from -rhs";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("threw: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", k + 1,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
