#include "varwass/finsler.hpp"

#include <algorithm>
#include <cmath>

#include "varwass/error.hpp"
#include "varwass/pde.hpp"

namespace varwass {

VelocityField min_norm_velocity(const DensityField& rho,
                                const TangentVector& nu, const Grid& g) {
  const std::size_t n = g.n_cells();
  if (rho.size() != n || nu.nu.size() != n) {
    throw Error(ErrorCode::size_mismatch, "field sizes do not match the grid");
  }
  double total = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += nu.nu[i] * g.dx();
    scale += std::abs(nu.nu[i]) * g.dx();
  }
  if (std::abs(total) > 1e-10 * std::max(scale, 1.0)) {
    throw Error(ErrorCode::nonzero_mean, "tangent vector must integrate to zero");
  }
  VelocityField v{FaceField(n + 1)};
  double flux = 0.0;
  for (std::size_t f = 1; f < n; ++f) {
    flux -= nu.nu[f - 1] * g.dx();
    if (flux == 0.0) continue;
    const double rf = 0.5 * (rho.density(f - 1, g) + rho.density(f, g));
    if (!(rf > 0.0)) {
      throw Error(ErrorCode::vanishing_density,
                  "nonzero flux through a face with zero density");
    }
    v.v_face[f] = flux / rf;
  }
  return v;
}

double tangent_norm(const DensityField& rho, const TangentVector& nu,
                    const ExponentField& p, const Grid& g) {
  const VelocityField v = min_norm_velocity(rho, nu, g);
  return luxemburg_norm(cell_average(v.v_face, g), rho, p, g);
}

TangentVector finsler_gradient(const DensityField& rho, const EnergyModel& e,
                               const ExponentField& q, const Grid& g,
                               double delta_reg) {
  CellField r = pde::rhs(rho, e, q, g, delta_reg);
  for (double& v : r.values) v = -v;
  return {std::move(r)};
}

TangentVector difference_quotient(const Trajectory& traj, std::size_t k,
                                  const Grid& g) {
  if (k + 1 >= traj.size()) {
    throw Error(ErrorCode::index_out_of_range, "no state after step index");
  }
  const double dt = traj.times[k + 1] - traj.times[k];
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "sample times must increase");
  }
  const std::size_t n = g.n_cells();
  CellField out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (traj.states[k + 1].mass(i) - traj.states[k].mass(i)) /
             (g.dx() * dt);
  }
  return {std::move(out)};
}

double metric_derivative(const Trajectory& traj, const ExponentField& p,
                         const Grid& g, std::size_t k) {
  return tangent_norm(traj.states[std::min(k, traj.size() - 1)],
                      difference_quotient(traj, k, g), p, g);
}

double curve_length(const Trajectory& traj, const ExponentField& p,
                    const Grid& g) {
  if (traj.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "curve needs at least two states");
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    total += metric_derivative(traj, p, g, k) * (traj.times[k + 1] - traj.times[k]);
  }
  return total;
}

Trajectory geodesic_trajectory(const DensityField& mu, const DensityField& nu,
                               std::size_t steps, const Grid& g) {
  if (steps == 0) {
    throw Error(ErrorCode::invalid_argument, "steps must be positive");
  }
  Trajectory traj;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    traj.times.push_back(t);
    traj.states.push_back(k == 0       ? mu
                          : k == steps ? nu
                                       : displacement_interpolation(mu, nu, t, g));
  }
  return traj;
}

}  // namespace varwass
