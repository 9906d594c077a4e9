#pragma once

#include <vector>

#include "varwass/grid.hpp"

namespace varwass {

/// Cell-wise variable exponent with 1 < p_minus <= p[i] <= p_plus < inf.
class ExponentField {
 public:
  /// Throws Error{exponent_out_of_range} if any value is <= 1 or not finite.
  explicit ExponentField(CellField p);

  static ExponentField constant(std::size_t n_cells, double value);

  const CellField& values() const { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }
  std::size_t size() const { return p_.size(); }
  double p_minus() const { return p_minus_; }
  double p_plus() const { return p_plus_; }

 private:
  CellField p_;
  double p_minus_;
  double p_plus_;
};

/// Discrete probability: cell masses m[i] >= 0 summing to one. The density
/// value on cell i is m[i]/dx.
class DensityField {
 public:
  static constexpr double kMassTolerance = 1e-12;

  /// Throws Error{invalid_density} on negative entries or a total mass off by
  /// more than kMassTolerance.
  explicit DensityField(CellField mass);

  /// Builds from density values (mass = value*dx) after normalizing to unit
  /// total mass. Throws on negative values or zero total.
  static DensityField from_density(const std::vector<double>& rho,
                                   const Grid& g);
  static DensityField uniform(const Grid& g);

  const CellField& mass() const { return mass_; }
  double mass(std::size_t i) const { return mass_[i]; }
  std::size_t size() const { return mass_.size(); }

  double density(std::size_t i, const Grid& g) const {
    return mass_[i] / g.dx();
  }
  CellField density(const Grid& g) const;
  double max_density(const Grid& g) const;

 private:
  CellField mass_;
};

/// q = p/(p-1) cell-wise.
ExponentField conjugate(const ExponentField& p);

/// sum_i |u[i]/lambda|^{p[i]} rho[i] dx. Cells with zero mass contribute
/// nothing.
double modular(const CellField& u, const DensityField& rho,
               const ExponentField& p, double lambda, const Grid& g);

/// Luxemburg norm inf{lambda > 0 : modular(u, rho, p, lambda) <= 1}, by
/// bracketed bisection to relative tolerance 1e-12.
double luxemburg_norm(const CellField& u, const DensityField& rho,
                      const ExponentField& p, const Grid& g);

}  // namespace varwass
