#pragma once

#include <functional>
#include <string>

#include "varwass/grid.hpp"
#include "varwass/varexp.hpp"

namespace varwass {

enum class EnergyKind { quadratic, entropy, power };

/// Densities are clamped to this floor wherever G' or G'' is evaluated.
inline constexpr double kDensityFloor = 1e-12;

/// Internal energy density G on [0, inf) with its calculus.
struct EnergyModel {
  EnergyKind kind;
  double exponent = 2.0;  // m for power energies
  std::string name;

  std::function<double(double)> eval;            // G(t)
  std::function<double(double)> deriv;           // G'(t)
  std::function<double(double)> second;          // G''(t)
  std::function<double(double)> legendre;        // G*(s)
  std::function<double(double)> legendre_deriv;  // (G*)'(s)

  /// inf of G' over (0, M2] is positive. Quadratic and entropy both fail it.
  bool satisfies_positive_derivative(double m2) const;
};

/// quadratic: t^2/2; entropy: t log t; power: t^m/(m-1) with m > 1.
EnergyModel builtin_energy(EnergyKind kind, double m = 2.0);

/// Parses "quadratic", "entropy" or "power". Throws Error{unknown_kind}.
EnergyKind parse_energy_kind(const std::string& name);

/// sum_i G(rho_i) dx.
double total_energy(const DensityField& rho, const EnergyModel& e,
                    const Grid& g);

/// |Omega| G(1/|Omega|), the value at the uniform density.
double jensen_lower_bound(const EnergyModel& e, const Grid& g);

/// G'(max(rho_i, floor)) per cell.
CellField energy_derivative(const DensityField& rho, const EnergyModel& e,
                            const Grid& g);

}  // namespace varwass
