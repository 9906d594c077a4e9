#pragma once

#include <cstddef>
#include <vector>

#include "varwass/energy.hpp"
#include "varwass/grid.hpp"
#include "varwass/transport.hpp"
#include "varwass/varexp.hpp"

namespace varwass {

/// How the proximal transport term of one step is discretized.
enum class TransportModel {
  /// Densities are piecewise constant in each cell; W^h is the monotone
  /// quantile pairing cost between them. Unknowns are the n target masses.
  piecewise,
  /// Masses are atoms at cell centers; the step is the joint program over
  /// the n x n plan with fixed row marginals. Mass can only move in whole
  /// cells, so the iterate is pinned whenever neighbouring G' differences
  /// stay below dx^p / (h^{p-1} p).
  atomic,
};

enum class JkoBackend {
  automatic,           // newton for piecewise, mirror_descent for atomic
  newton,              // piecewise only
  mirror_descent,      // atomic only
  projected_gradient,  // atomic only, verification backend
};

struct JkoOptions {
  TransportModel model = TransportModel::piecewise;
  JkoBackend backend = JkoBackend::automatic;
  std::size_t max_iterations = 0;  // 0: backend default
  double rel_tol = 1e-9;
  /// Atomic model: replace the solver plan by an exact optimal plan between
  /// rho_prev and rho_next before returning.
  bool exact_coupling = true;
};

struct JkoStepResult {
  DensityField rho_next;
  Coupling coupling;
  bool coupling_is_exact = false;
  double transport_cost = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double el_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// rho^h sampled at the step boundaries: states[k] lives on
/// [times[k], times[k+1]). `steps` is filled by run_flow only.
struct Trajectory {
  std::vector<double> times;
  std::vector<DensityField> states;
  std::vector<JkoStepResult> steps;

  std::size_t size() const { return states.size(); }
};

/// Minimizes E(rho) + W^h(rho_prev, rho). Throws Error{nonpositive_h}.
/// Nonconvergence is reported through `converged`.
JkoStepResult jko_step(const DensityField& rho_prev, const EnergyModel& e,
                       const ExponentField& p, double h, const Grid& g,
                       const JkoOptions& opts = {});

/// I(rho) = E(rho) + W^h(rho_prev, rho) under the given transport model.
/// The atomic model evaluates W^h with solve_exact.
double step_objective(const DensityField& rho_prev, const DensityField& rho,
                      const EnergyModel& e, const ExponentField& p, double h,
                      const Grid& g, TransportModel model);

/// ceil(t_end/h) successive steps. Step failures are rethrown with the step
/// index in the message.
Trajectory run_flow(const DensityField& rho0, const EnergyModel& e,
                    const ExponentField& p, double h, double t_end,
                    const Grid& g, const JkoOptions& opts = {});

struct ElResidual {
  double value = 0.0;
  bool from_exact_coupling = false;
};

/// Mass-weighted L1 mismatch between the barycentric displacement of the
/// step's plan and -h |grad G'(rho_next)|^{q-2} grad G'(rho_next).
ElResidual el_residual(const JkoStepResult& step, const EnergyModel& e,
                       const ExponentField& p, double h, const Grid& g);

/// Face quadrature of int |grad G'(rho)|^{q(x)} / p(x) rho dx.
double dissipation_functional(const DensityField& rho, const EnergyModel& e,
                              const ExponentField& p, const Grid& g);

struct DissipationReport {
  /// E(rho^{k-1}) - E(rho^k) - h * dissipation_functional(rho^k), per step.
  std::vector<double> step_slack;
  double cumulative_lhs = 0.0;  // E(rho_0) - |Omega| G(1/|Omega|)
  double cumulative_rhs = 0.0;  // sum of h * dissipation_functional
  double cumulative_slack = 0.0;
  double worst_slack = 0.0;  // min over step slacks and cumulative slack

  bool holds(double tol) const { return worst_slack >= -tol; }
};

DissipationReport dissipation_check(const Trajectory& traj,
                                    const EnergyModel& e,
                                    const ExponentField& p, double h,
                                    const Grid& g);

}  // namespace varwass
