#pragma once

#include <vector>

#include "varwass/energy.hpp"
#include "varwass/grid.hpp"
#include "varwass/jko.hpp"
#include "varwass/varexp.hpp"

namespace varwass::pde {

struct PdeConfig {
  double cfl = 0.4;  // explicit diffusion is stable for cfl <= 0.5
  double delta_reg = 1e-8;
  double t_end = 0.0;
  /// Spacing of stored states; 0 stores only t = 0 and t = t_end.
  double output_dt = 0.0;
  double min_diffusivity = 1e-12;
  std::size_t max_steps = 50'000'000;
};

/// div(rho_face (|s|^2 + delta^2)^{(q_face-2)/2} s) with s = grad G'(rho) on
/// faces, arithmetic face means and zero boundary flux.
CellField rhs(const DensityField& rho, const EnergyModel& e,
              const ExponentField& q, const Grid& g, double delta_reg = 1e-8);

/// sum over interior faces of rho_face (|s|^2 + delta^2)^{(q-2)/2} s^2 dx,
/// the rate -dE/dt of the semi-discrete flow.
double dissipation_rate(const DensityField& rho, const EnergyModel& e,
                        const ExponentField& q, const Grid& g,
                        double delta_reg = 1e-8);

/// Largest explicit time step allowed by cfg.cfl at this state.
double stable_dt(const DensityField& rho, const EnergyModel& e,
                 const ExponentField& q, const PdeConfig& cfg, const Grid& g);

/// Explicit Euler. Throws Error{blow_up} on NaN, negative mass or any density
/// above 1e6.
Trajectory solve(const DensityField& rho0, const EnergyModel& e,
                 const ExponentField& q, const PdeConfig& cfg, const Grid& g);

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> positive_part;  // int (rho1 - rho2)^+ dx
  bool nonincreasing = true;
  bool initially_ordered = false;  // rho1_0 <= rho2_0 everywhere
  bool ordering_persists = false;  // rho1 <= rho2 at every sample
  double max_increase = 0.0;
};

/// Compares scale1 * first against scale2 * second. With entropy G the
/// equation is 1-homogeneous in rho, so a scaled probability solution is a
/// solution of total mass `scale`; this is how ordered pairs are expressed.
/// Throws Error{shape_mismatch} when sample times or sizes differ.
ComparisonReport comparison_check(const Trajectory& first,
                                  const Trajectory& second, const Grid& g,
                                  double tol = 1e-9, double scale1 = 1.0,
                                  double scale2 = 1.0);

}  // namespace varwass::pde
