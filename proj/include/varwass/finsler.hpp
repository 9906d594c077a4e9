#pragma once

#include <cstddef>

#include "varwass/energy.hpp"
#include "varwass/grid.hpp"
#include "varwass/jko.hpp"
#include "varwass/varexp.hpp"

namespace varwass {

/// Rate of change of the density; integrates to zero.
struct TangentVector {
  CellField nu;
};

/// Face velocities, zero on both boundary faces.
struct VelocityField {
  FaceField v_face;
};

/// In 1-D with no-flux walls, -div(rho v) = nu fixes the flux rho v on every
/// face, so the feasible set of the minimum-norm problem is a single field:
/// flux[i+1/2] = -sum_{j<=i} nu[j] dx and v = flux / rho_face.
/// Throws Error{nonzero_mean} or Error{vanishing_density}.
VelocityField min_norm_velocity(const DensityField& rho,
                                const TangentVector& nu, const Grid& g);

/// Luxemburg norm (weight rho, exponent p) of the cell-averaged minimum-norm
/// velocity.
double tangent_norm(const DensityField& rho, const TangentVector& nu,
                    const ExponentField& p, const Grid& g);

/// -div(rho |grad G'|^{q-2} grad G'), i.e. the negated pde right-hand side.
TangentVector finsler_gradient(const DensityField& rho, const EnergyModel& e,
                               const ExponentField& q, const Grid& g,
                               double delta_reg = 1e-8);

/// (rho^{k+1} - rho^k) / (t_{k+1} - t_k) as densities.
TangentVector difference_quotient(const Trajectory& traj, std::size_t k,
                                  const Grid& g);

/// sum_k F(rho^k, difference_quotient_k) (t_{k+1} - t_k). Needs >= 2 states.
double curve_length(const Trajectory& traj, const ExponentField& p,
                    const Grid& g);

/// F(rho^k, difference_quotient_k). Throws Error{index_out_of_range}.
double metric_derivative(const Trajectory& traj, const ExponentField& p,
                         const Grid& g, std::size_t k);

/// Samples the displacement interpolation between mu and nu at
/// t = 0, 1/steps, ..., 1.
Trajectory geodesic_trajectory(const DensityField& mu, const DensityField& nu,
                               std::size_t steps, const Grid& g);

}  // namespace varwass
