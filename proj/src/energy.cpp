#include "varwass/energy.hpp"

#include <algorithm>
#include <cmath>

#include "varwass/error.hpp"

namespace varwass {

namespace {

double floored(double t) { return std::max(t, kDensityFloor); }

EnergyModel quadratic() {
  EnergyModel e{EnergyKind::quadratic, 2.0, "quadratic", {}, {}, {}, {}, {}};
  e.eval = [](double t) { return 0.5 * t * t; };
  e.deriv = [](double t) { return floored(t); };
  e.second = [](double) { return 1.0; };
  // Conjugate over t >= 0.
  e.legendre = [](double s) { return s > 0.0 ? 0.5 * s * s : 0.0; };
  e.legendre_deriv = [](double s) { return std::max(s, 0.0); };
  return e;
}

EnergyModel entropy() {
  EnergyModel e{EnergyKind::entropy, 1.0, "entropy", {}, {}, {}, {}, {}};
  e.eval = [](double t) { return t > 0.0 ? t * std::log(t) : 0.0; };
  e.deriv = [](double t) { return std::log(floored(t)) + 1.0; };
  e.second = [](double t) { return 1.0 / floored(t); };
  e.legendre = [](double s) { return std::exp(s - 1.0); };
  e.legendre_deriv = [](double s) { return std::exp(s - 1.0); };
  return e;
}

EnergyModel power(double m) {
  if (!(m > 1.0) || !std::isfinite(m)) {
    throw Error(ErrorCode::invalid_argument, "power energy needs m > 1");
  }
  EnergyModel e{EnergyKind::power, m, "power", {}, {}, {}, {}, {}};
  e.eval = [m](double t) { return t > 0.0 ? std::pow(t, m) / (m - 1.0) : 0.0; };
  e.deriv = [m](double t) {
    return m * std::pow(floored(t), m - 1.0) / (m - 1.0);
  };
  e.second = [m](double t) { return m * std::pow(floored(t), m - 2.0); };
  // G'(t) = s  <=>  t = ((m-1) s / m)^{1/(m-1)}; G*(s) = s t (m-1)/m.
  e.legendre = [m](double s) {
    if (s <= 0.0) return 0.0;
    const double t = std::pow((m - 1.0) * s / m, 1.0 / (m - 1.0));
    return s * t * (m - 1.0) / m;
  };
  e.legendre_deriv = [m](double s) {
    if (s <= 0.0) return 0.0;
    return std::pow((m - 1.0) * s / m, 1.0 / (m - 1.0));
  };
  return e;
}

}  // namespace

bool EnergyModel::satisfies_positive_derivative(double m2) const {
  if (!(m2 > 0.0)) return false;
  // Sampled infimum; the density floor keeps deriv(0) at roughly 1e-12 for
  // G' vanishing at 0, so positivity needs a margin above that scale.
  const int samples = 400;
  const double lo = std::log(kDensityFloor);
  const double hi = std::log(m2);
  double inf = deriv(0.0);
  for (int k = 0; k <= samples; ++k) {
    inf = std::min(inf, deriv(std::exp(lo + (hi - lo) * k / samples)));
  }
  return inf > 1e-9 * std::max(1.0, std::abs(deriv(m2)));
}

EnergyModel builtin_energy(EnergyKind kind, double m) {
  switch (kind) {
    case EnergyKind::quadratic: return quadratic();
    case EnergyKind::entropy: return entropy();
    case EnergyKind::power: return power(m);
  }
  throw Error(ErrorCode::unknown_kind, "unknown energy kind");
}

EnergyKind parse_energy_kind(const std::string& name) {
  if (name == "quadratic") return EnergyKind::quadratic;
  if (name == "entropy") return EnergyKind::entropy;
  if (name == "power") return EnergyKind::power;
  throw Error(ErrorCode::unknown_kind, "unknown energy kind '" + name + "'");
}

double total_energy(const DensityField& rho, const EnergyModel& e,
                    const Grid& g) {
  if (rho.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "density/grid size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += e.eval(rho.density(i, g));
  return s * g.dx();
}

double jensen_lower_bound(const EnergyModel& e, const Grid& g) {
  return g.length() * e.eval(1.0 / g.length());
}

CellField energy_derivative(const DensityField& rho, const EnergyModel& e,
                            const Grid& g) {
  CellField d(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) d[i] = e.deriv(rho.density(i, g));
  return d;
}

}  // namespace varwass
