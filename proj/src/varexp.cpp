#include "varwass/varexp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varwass/error.hpp"

namespace varwass {

ExponentField::ExponentField(CellField p) : p_(std::move(p)) {
  if (p_.size() == 0) {
    throw Error(ErrorCode::exponent_out_of_range, "empty exponent field");
  }
  p_minus_ = p_[0];
  p_plus_ = p_[0];
  for (double v : p_.values) {
    if (!std::isfinite(v) || v <= 1.0) {
      throw Error(ErrorCode::exponent_out_of_range,
                  "exponent " + std::to_string(v) +
                      " violates 1 < p_minus <= p <= p_plus < inf");
    }
    p_minus_ = std::min(p_minus_, v);
    p_plus_ = std::max(p_plus_, v);
  }
}

ExponentField ExponentField::constant(std::size_t n_cells, double value) {
  return ExponentField(CellField(n_cells, value));
}

DensityField::DensityField(CellField mass) : mass_(std::move(mass)) {
  double total = 0.0;
  for (double m : mass_.values) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::invalid_density,
                  "cell mass " + std::to_string(m) + " is not a nonnegative number");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::invalid_density,
                "total mass " + std::to_string(total) + " differs from 1");
  }
}

DensityField DensityField::from_density(const std::vector<double>& rho,
                                        const Grid& g) {
  if (rho.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "density/grid size mismatch");
  }
  double total = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::invalid_density, "negative or non-finite density");
    }
    total += r * g.dx();
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::invalid_density, "density has zero total mass");
  }
  CellField m(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) m[i] = rho[i] * g.dx() / total;
  return DensityField(std::move(m));
}

DensityField DensityField::uniform(const Grid& g) {
  return DensityField(
      CellField(g.n_cells(), 1.0 / static_cast<double>(g.n_cells())));
}

CellField DensityField::density(const Grid& g) const {
  CellField r(mass_.size());
  for (std::size_t i = 0; i < mass_.size(); ++i) r[i] = mass_[i] / g.dx();
  return r;
}

double DensityField::max_density(const Grid& g) const {
  return *std::max_element(mass_.values.begin(), mass_.values.end()) / g.dx();
}

ExponentField conjugate(const ExponentField& p) {
  CellField q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[i] / (p[i] - 1.0);
  return ExponentField(std::move(q));
}

namespace {

void check_sizes(const CellField& u, const DensityField& rho,
                 const ExponentField& p, const Grid& g) {
  if (u.size() != g.n_cells() || rho.size() != g.n_cells() ||
      p.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch,
                "field sizes do not match the grid");
  }
}

// Modular with the zero-mass and zero-value cells already filtered out.
double modular_unchecked(const CellField& u, const DensityField& rho,
                         const ExponentField& p, double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = rho.mass(i);
    if (m == 0.0 || u[i] == 0.0) continue;
    s += std::pow(std::abs(u[i]) / lambda, p[i]) * m;
  }
  return s;
}

}  // namespace

double modular(const CellField& u, const DensityField& rho,
               const ExponentField& p, double lambda, const Grid& g) {
  check_sizes(u, rho, p, g);
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::nonpositive_lambda, "modular needs lambda > 0");
  }
  return modular_unchecked(u, rho, p, lambda);
}

double luxemburg_norm(const CellField& u, const DensityField& rho,
                      const ExponentField& p, const Grid& g) {
  check_sizes(u, rho, p, g);
  double sup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (rho.mass(i) > 0.0) sup = std::max(sup, std::abs(u[i]));
  }
  if (sup == 0.0) return 0.0;

  // The modular is continuous and strictly decreasing in lambda on the
  // support, so any straddling bracket converges.
  double lo = sup;
  double hi = sup;
  while (modular_unchecked(u, rho, p, hi) > 1.0) hi *= 2.0;
  while (modular_unchecked(u, rho, p, lo) < 1.0) lo *= 0.5;
  for (int it = 0; it < 400 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (modular_unchecked(u, rho, p, mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace varwass
