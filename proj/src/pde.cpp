#include "varwass/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varwass/error.hpp"

namespace varwass::pde {

namespace {

constexpr double kBlowUpDensity = 1e6;

void check_sizes(const DensityField& rho, const ExponentField& q,
                 const Grid& g) {
  if (rho.size() != g.n_cells() || q.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "field sizes do not match the grid");
  }
}

double face_exponent(const ExponentField& q, std::size_t f) {
  return 0.5 * (q[f - 1] + q[f]);
}

double mobility(double s, double qf, double delta) {
  return std::pow(s * s + delta * delta, 0.5 * (qf - 2.0));
}

FaceField flux(const DensityField& rho, const EnergyModel& e,
               const ExponentField& q, const Grid& g, double delta) {
  const FaceField s = gradient(energy_derivative(rho, e, g), g);
  const std::size_t n = g.n_cells();
  FaceField out(n + 1);
  for (std::size_t f = 1; f < n; ++f) {
    const double rf = 0.5 * (rho.density(f - 1, g) + rho.density(f, g));
    out[f] = rf * mobility(s[f], face_exponent(q, f), delta) * s[f];
  }
  return out;
}

}  // namespace

CellField rhs(const DensityField& rho, const EnergyModel& e,
              const ExponentField& q, const Grid& g, double delta_reg) {
  check_sizes(rho, q, g);
  return divergence(flux(rho, e, q, g, delta_reg), g);
}

double dissipation_rate(const DensityField& rho, const EnergyModel& e,
                        const ExponentField& q, const Grid& g,
                        double delta_reg) {
  check_sizes(rho, q, g);
  const FaceField s = gradient(energy_derivative(rho, e, g), g);
  double total = 0.0;
  for (std::size_t f = 1; f < g.n_cells(); ++f) {
    const double rf = 0.5 * (rho.density(f - 1, g) + rho.density(f, g));
    total += rf * mobility(s[f], face_exponent(q, f), delta_reg) * s[f] * s[f];
  }
  return total * g.dx();
}

double stable_dt(const DensityField& rho, const EnergyModel& e,
                 const ExponentField& q, const PdeConfig& cfg, const Grid& g) {
  check_sizes(rho, q, g);
  const FaceField s = gradient(energy_derivative(rho, e, g), g);
  const std::size_t n = g.n_cells();
  double d_max = cfg.min_diffusivity;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::max(rho.density(i, g), kDensityFloor);
    double m = 0.0;
    for (std::size_t f = std::max<std::size_t>(i, 1); f <= std::min(i + 1, n - 1);
         ++f) {
      const double qf = face_exponent(q, f);
      m = std::max(m, std::max(1.0, qf - 1.0) * mobility(s[f], qf, cfg.delta_reg));
    }
    d_max = std::max(d_max, r * e.second(r) * m);
  }
  return cfg.cfl * g.dx() * g.dx() / d_max;
}

Trajectory solve(const DensityField& rho0, const EnergyModel& e,
                 const ExponentField& q, const PdeConfig& cfg, const Grid& g) {
  check_sizes(rho0, q, g);
  if (!(cfg.t_end >= 0.0) || !(cfg.output_dt >= 0.0) || !(cfg.cfl > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid pde time settings");
  }
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);

  std::vector<double> outputs;
  if (cfg.output_dt > 0.0) {
    for (std::size_t k = 1;; ++k) {
      const double t = static_cast<double>(k) * cfg.output_dt;
      if (t >= cfg.t_end * (1.0 - 1e-12)) break;
      outputs.push_back(t);
    }
  }
  if (cfg.t_end > 0.0) outputs.push_back(cfg.t_end);

  const std::size_t n = g.n_cells();
  std::vector<double> m = rho0.mass().values;
  double t = 0.0;
  std::size_t steps = 0;
  for (double target : outputs) {
    while (t < target) {
      if (++steps > cfg.max_steps) {
        throw Error(ErrorCode::blow_up, "pde step budget exhausted");
      }
      const DensityField cur{CellField(m)};
      double dt = stable_dt(cur, e, q, cfg, g);
      bool last = false;
      if (t + dt >= target * (1.0 - 1e-14)) {
        dt = target - t;
        last = true;
      }
      const CellField r = rhs(cur, e, q, g, cfg.delta_reg);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] += dt * g.dx() * r[i];
        if (!std::isfinite(m[i]) || m[i] < -1e-14 ||
            m[i] / g.dx() > kBlowUpDensity) {
          throw Error(ErrorCode::blow_up,
                      "pde state left the admissible range at t=" +
                          std::to_string(t + dt));
        }
        m[i] = std::max(m[i], 0.0);
        total += m[i];
      }
      for (double& v : m) v /= total;
      t = last ? target : t + dt;
    }
    traj.times.push_back(target);
    traj.states.emplace_back(CellField(m));
  }
  return traj;
}

ComparisonReport comparison_check(const Trajectory& first,
                                  const Trajectory& second, const Grid& g,
                                  double tol, double scale1, double scale2) {
  if (first.size() != second.size() || first.size() == 0) {
    throw Error(ErrorCode::shape_mismatch, "trajectories differ in length");
  }
  ComparisonReport rep;
  rep.ordering_persists = true;
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (std::abs(first.times[k] - second.times[k]) >
            1e-12 * std::max(1.0, std::abs(first.times[k])) ||
        first.states[k].size() != g.n_cells() ||
        second.states[k].size() != g.n_cells()) {
      throw Error(ErrorCode::shape_mismatch, "trajectories are not aligned");
    }
    double pos = 0.0;
    bool ordered = true;
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      const double d =
          scale1 * first.states[k].mass(i) - scale2 * second.states[k].mass(i);
      pos += std::max(d, 0.0);
      if (d > tol * g.dx()) ordered = false;
    }
    if (k == 0) rep.initially_ordered = ordered;
    rep.ordering_persists = rep.ordering_persists && ordered;
    if (!rep.positive_part.empty()) {
      const double inc = pos - rep.positive_part.back();
      rep.max_increase = std::max(rep.max_increase, inc);
      if (inc > tol) rep.nonincreasing = false;
    }
    rep.times.push_back(first.times[k]);
    rep.positive_part.push_back(pos);
  }
  return rep;
}

}  // namespace varwass::pde
