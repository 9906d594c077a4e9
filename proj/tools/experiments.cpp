#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

#include "varwass/error.hpp"
#include "varwass/finsler.hpp"
#include "varwass/transport.hpp"

namespace varwass::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  Csv& row() {
    rows_.emplace_back();
    return *this;
  }
  Csv& add(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    rows_.back().emplace_back(buf);
    return *this;
  }
  Csv& add(std::size_t v) {
    rows_.back().push_back(std::to_string(v));
    return *this;
  }
  Csv& add(const std::string& v) {
    rows_.back().push_back(v);
    return *this;
  }

  void write(const RunContext& ctx, const std::string& name) const {
    const std::filesystem::path path =
        std::filesystem::path(ctx.out_dir) / (name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw ConfigError(kExitValidation,
                        "cannot write output file " + path.string());
    }
    out << "# config_hash=" << ctx.config_hash << " version=" << kVersion
        << "\n";
    write_line(out, header_);
    for (const auto& r : rows_) write_line(out, r);
    if (!ctx.quiet) std::cout << "wrote " << path.string() << "\n";
  }

 private:
  static void write_line(std::ostream& out, const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out << ',';
      out << r[k];
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

double mass_error(const DensityField& rho) {
  double total = 0.0;
  for (double m : rho.mass().values) total += m;
  return std::abs(total - 1.0);
}

double l1_distance(const DensityField& a, const DensityField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.mass(i) - b.mass(i));
  return s;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void note(const RunContext& ctx, const std::string& msg) {
  if (!ctx.quiet) std::cout << msg << "\n";
}

Csv jko_table(const Trajectory& traj, const EnergyModel& e,
              const ExponentField& p, double h, const Grid& g) {
  const DissipationReport rep = dissipation_check(traj, e, p, h, g);
  Csv csv({"step", "time", "energy", "transport_cost", "max_density",
           "mass_error", "el_residual", "dissipation_slack"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const DensityField& s = traj.states[k];
    csv.row().add(k).add(traj.times[k]).add(total_energy(s, e, g));
    csv.add(k ? traj.steps[k - 1].transport_cost : 0.0);
    csv.add(s.max_density(g)).add(mass_error(s));
    csv.add(k ? traj.steps[k - 1].el_residual : 0.0);
    csv.add(k ? rep.step_slack[k - 1] : 0.0);
  }
  return csv;
}

Csv pde_table(const Trajectory& traj, const EnergyModel& e,
              const ExponentField& q, double delta, const Grid& g) {
  Csv csv({"step", "time", "energy", "max_density", "mass_error",
           "dissipation_slack"});
  double prev = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const DensityField& s = traj.states[k];
    const double energy = total_energy(s, e, g);
    double slack = 0.0;
    if (k) {
      const double dt = traj.times[k] - traj.times[k - 1];
      slack = prev - energy - dt * pde::dissipation_rate(s, e, q, g, delta);
    }
    csv.row().add(k).add(traj.times[k]).add(energy).add(s.max_density(g));
    csv.add(mass_error(s)).add(slack);
    prev = energy;
  }
  return csv;
}

void warn_nonconverged(const Trajectory& traj) {
  std::size_t bad = 0;
  for (const auto& s : traj.steps) bad += s.converged ? 0 : 1;
  if (bad) {
    std::cerr << "warning: " << bad
              << " JKO step(s) hit the iteration cap before converging\n";
  }
}

int run_norms(const ExperimentConfig& cfg, const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField p = build_exponent(cfg.exponent, g);
  const ExponentField q = conjugate(p);
  const DensityField rho = build_density(cfg.initial, g);
  std::mt19937_64 rng(*cfg.seed);
  const double holder_const = 1.0 / p.p_minus() + 1.0 / q.p_minus();
  Csv csv({"sample", "luxemburg_norm", "modular_at_norm", "conjugate_norm",
           "holder_lhs", "holder_rhs"});
  for (std::size_t s = 0; s < cfg.solver.samples; ++s) {
    CellField u(g.n_cells());
    CellField v(g.n_cells());
    const double scale = std::exp(4.0 * uniform01(rng) - 2.0);
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      u[i] = scale * (2.0 * uniform01(rng) - 1.0);
      v[i] = 2.0 * uniform01(rng) - 1.0;
    }
    const double nu = luxemburg_norm(u, rho, p, g);
    const double nv = luxemburg_norm(v, rho, q, g);
    double lhs = 0.0;
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      lhs += std::abs(u[i] * v[i]) * rho.mass(i);
    }
    csv.row().add(s).add(nu).add(nu > 0.0 ? modular(u, rho, p, nu, g) : 0.0);
    csv.add(nv).add(lhs).add(holder_const * nu * nv);
  }
  csv.write(ctx, "norms");
  return kExitOk;
}

int run_transport(const ExperimentConfig& cfg, Mode mode,
                  const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField p = build_exponent(cfg.exponent, g);
  const DensityField mu = build_density(cfg.initial, g);
  const DensityField nu = build_density(*cfg.target, g);
  const CostMatrix c = build_cost(g, p, cfg.h);
  Csv csv({"method", "value", "marginal_violation", "iterations", "converged"});
  const ExactTransport exact = solve_exact(c, mu, nu);
  csv.row().add(std::string("exact")).add(exact.value);
  csv.add(exact.coupling.marginal_violation()).add(exact.pivots).add(std::size_t{1});
  if (mode == Mode::oracle) {
    if (g.n_cells() > kVertexEnumerationLimit) {
      throw ConfigError(kExitValidation,
                        "transport oracle enumerates vertices and needs "
                        "n_cells <= " +
                            std::to_string(kVertexEnumerationLimit));
    }
    const ExactTransport brute = solve_vertex_enumeration(c, mu, nu);
    csv.row().add(std::string("vertex_enumeration")).add(brute.value);
    csv.add(brute.coupling.marginal_violation()).add(std::size_t{0});
    csv.add(std::size_t{1});
    csv.write(ctx, "transport_oracle");
    return kExitOk;
  }
  const double eps = cfg.solver.eps > 0.0 ? cfg.solver.eps : 1e-3 * c.median();
  EntropicOptions eo;
  if (cfg.solver.max_iterations) eo.max_iterations = cfg.solver.max_iterations;
  const EntropicTransport ent = solve_entropic(c, mu, nu, eps, eo);
  if (!ent.converged) {
    std::cerr << "warning: entropic solver stopped at the iteration cap\n";
  }
  csv.row().add(std::string("entropic")).add(ent.value);
  csv.add(ent.marginal_violation).add(ent.iterations);
  csv.add(std::size_t{ent.converged ? 1u : 0u});
  csv.row().add(std::string("piecewise"));
  csv.add(continuous_transport_cost(mu, nu, p, cfg.h, g));
  csv.add(0.0).add(std::size_t{0}).add(std::size_t{1});
  if (p.p_minus() == p.p_plus()) {
    csv.row().add(std::string("wasserstein_1d"));
    csv.add(wasserstein_1d(p.p_minus(), mu, nu, g));
    csv.add(0.0).add(std::size_t{0}).add(std::size_t{1});
  }
  csv.write(ctx, "transport");
  return kExitOk;
}

JkoOptions jko_options(const ExperimentConfig& cfg, Mode mode) {
  JkoOptions o = build_jko_options(cfg.solver);
  if (mode == Mode::oracle) {
    o.model = TransportModel::atomic;
    o.backend = JkoBackend::projected_gradient;
  }
  return o;
}

int run_jko(const ExperimentConfig& cfg, Mode mode, const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField p = build_exponent(cfg.exponent, g);
  const EnergyModel e = build_energy(cfg);
  const DensityField rho0 = build_density(cfg.initial, g);
  const Trajectory traj =
      run_flow(rho0, e, p, cfg.h, cfg.t_end, g, jko_options(cfg, mode));
  warn_nonconverged(traj);
  jko_table(traj, e, p, cfg.h, g).write(ctx, "jko");
  return kExitOk;
}

pde::PdeConfig pde_config(const ExperimentConfig& cfg, Mode mode) {
  pde::PdeConfig pc = build_pde_config(cfg);
  if (mode == Mode::oracle) pc.cfl *= 0.25;
  return pc;
}

int run_pde(const ExperimentConfig& cfg, Mode mode, const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField q = conjugate(build_exponent(cfg.exponent, g));
  const EnergyModel e = build_energy(cfg);
  const DensityField rho0 = build_density(cfg.initial, g);
  const pde::PdeConfig pc = pde_config(cfg, mode);
  const Trajectory traj = pde::solve(rho0, e, q, pc, g);
  pde_table(traj, e, q, pc.delta_reg, g).write(ctx, "pde");
  return kExitOk;
}

int run_compare(const ExperimentConfig& cfg, Mode mode, const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField p = build_exponent(cfg.exponent, g);
  const ExponentField q = conjugate(p);
  const EnergyModel e = build_energy(cfg);
  const DensityField rho0 = build_density(cfg.initial, g);
  const Trajectory jko =
      run_flow(rho0, e, p, cfg.h, cfg.t_end, g, jko_options(cfg, mode));
  warn_nonconverged(jko);
  pde::PdeConfig pc = pde_config(cfg, mode);
  pc.output_dt = cfg.h;
  const Trajectory ref = pde::solve(rho0, e, q, pc, g);
  if (ref.size() != jko.size()) {
    throw Error(ErrorCode::shape_mismatch, "jko and pde samples do not align");
  }
  Csv csv({"step", "time", "l1_error"});
  double final_error = 0.0;
  for (std::size_t k = 0; k < jko.size(); ++k) {
    final_error = l1_distance(jko.states[k], ref.states[k]);
    csv.row().add(k).add(jko.times[k]).add(final_error);
  }
  csv.write(ctx, "compare");
  jko_table(jko, e, p, cfg.h, g).write(ctx, "jko");
  pde_table(ref, e, q, pc.delta_reg, g).write(ctx, "pde");
  char buf[96];
  std::snprintf(buf, sizeof buf, "final L1 error %.3e (threshold %.3e)",
                final_error, cfg.solver.threshold);
  if (final_error > cfg.solver.threshold) {
    std::cerr << "compare failed: " << buf << "\n";
    return kExitNumerical;
  }
  note(ctx, buf);
  return kExitOk;
}

int run_finsler(const ExperimentConfig& cfg, const RunContext& ctx) {
  const Grid g = build_grid(cfg);
  const ExponentField p = build_exponent(cfg.exponent, g);
  const ExponentField q = conjugate(p);
  const EnergyModel e = build_energy(cfg);
  const DensityField mu = build_density(cfg.initial, g);
  const DensityField nu = build_density(*cfg.target, g);
  const Trajectory traj = geodesic_trajectory(mu, nu, cfg.solver.steps, g);
  Csv path({"step", "time", "metric_derivative", "energy"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    path.row().add(k).add(traj.times[k]);
    path.add(k + 1 < traj.size() ? metric_derivative(traj, p, g, k) : 0.0);
    path.add(total_energy(traj.states[k], e, g));
  }
  path.write(ctx, "finsler");

  const double length = curve_length(traj, p, g);
  const double w_minus = wasserstein_1d(p.p_minus(), mu, nu, g);
  const TangentVector grad =
      finsler_gradient(mu, e, q, g, cfg.solver.delta_reg);
  Csv summary({"quantity", "value"});
  summary.row().add(std::string("curve_length")).add(length);
  summary.row().add(std::string("wasserstein_p_minus")).add(w_minus);
  summary.row().add(std::string("lower_bound")).add(0.5 * w_minus);
  summary.row().add(std::string("gradient_norm_initial"));
  summary.add(tangent_norm(mu, grad, p, g));
  summary.write(ctx, "finsler_summary");
  return kExitOk;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, Mode mode,
                   const RunContext& ctx) {
  std::filesystem::create_directories(ctx.out_dir);
  if (mode == Mode::oracle && (cfg.kind == "norms" || cfg.kind == "finsler")) {
    throw ConfigError(kExitValidation,
                      "no reference backend exists for experiment kind '" +
                          cfg.kind + "'");
  }
  if (cfg.kind == "norms") return run_norms(cfg, ctx);
  if (cfg.kind == "transport") return run_transport(cfg, mode, ctx);
  if (cfg.kind == "jko") return run_jko(cfg, mode, ctx);
  if (cfg.kind == "pde") return run_pde(cfg, mode, ctx);
  if (cfg.kind == "compare") return run_compare(cfg, mode, ctx);
  return run_finsler(cfg, ctx);
}

}  // namespace varwass::cli
