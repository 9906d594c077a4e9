#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "varwass/grid.hpp"
#include "varwass/varexp.hpp"

namespace testutil {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline varwass::DensityField random_density(std::mt19937_64& rng,
                                            const varwass::Grid& g,
                                            double floor = 0.05) {
  std::vector<double> r(g.n_cells());
  for (double& v : r) v = floor + uniform(rng);
  return varwass::DensityField::from_density(r, g);
}

inline varwass::ExponentField random_exponent(std::mt19937_64& rng,
                                              std::size_t n, double lo,
                                              double hi) {
  varwass::CellField p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = uniform(rng, lo, hi);
  return varwass::ExponentField(std::move(p));
}

inline varwass::CellField random_cell_field(std::mt19937_64& rng,
                                            std::size_t n, double amp = 1.0) {
  varwass::CellField u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = uniform(rng, -amp, amp);
  return u;
}

inline varwass::DensityField cosine_bump(const varwass::Grid& g,
                                         double amplitude = 0.5) {
  std::vector<double> r(g.n_cells());
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    r[i] = 1.0 + amplitude * std::cos(M_PI * g.center(i));
  }
  return varwass::DensityField::from_density(r, g);
}

inline double l1_mass(const varwass::DensityField& a,
                      const varwass::DensityField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.mass(i) - b.mass(i));
  return s;
}

}  // namespace testutil
