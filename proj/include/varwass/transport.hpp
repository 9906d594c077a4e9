#pragma once

#include <cstddef>
#include <vector>

#include "varwass/grid.hpp"
#include "varwass/varexp.hpp"

namespace varwass {

/// c[i][j] = |x_i - x_j|^{p(x_i)} / (h^{p(x_i)-1} p(x_i)) on cell centers.
/// The exponent is taken at the source point, so c is not symmetric.
class CostMatrix {
 public:
  CostMatrix(std::size_t n, double h, std::vector<double> source_exponent,
             std::vector<double> entries);

  std::size_t size() const { return n_; }
  double h() const { return h_; }
  double operator()(std::size_t i, std::size_t j) const {
    return c_[i * n_ + j];
  }
  const std::vector<double>& entries() const { return c_; }
  const std::vector<double>& source_exponent() const { return p_; }
  double median() const;

 private:
  std::size_t n_;
  double h_;
  std::vector<double> p_;
  std::vector<double> c_;
};

/// Throws Error{nonpositive_h} unless h > 0.
CostMatrix build_cost(const Grid& g, const ExponentField& p, double h);

/// Cost |x_i - x_j|^r / r with a constant exponent r (the classical
/// Kantorovich cost, used as a reference).
CostMatrix build_power_cost(const Grid& g, double r);

/// Transport plan with row-major storage.
struct Coupling {
  std::size_t n = 0;
  std::vector<double> gamma;
  CellField row_marginal;
  CellField col_marginal;

  Coupling() = default;
  explicit Coupling(std::size_t n_)
      : n(n_), gamma(n_ * n_, 0.0), row_marginal(n_), col_marginal(n_) {}

  double operator()(std::size_t i, std::size_t j) const {
    return gamma[i * n + j];
  }
  double& at(std::size_t i, std::size_t j) { return gamma[i * n + j]; }

  /// Largest |row sum - row_marginal| and |col sum - col_marginal|.
  double marginal_violation() const;
  double cost(const CostMatrix& c) const;
};

struct ExactTransport {
  Coupling coupling;
  double value = 0.0;
  std::vector<double> u;  // dual potential on sources
  std::vector<double> v;  // dual potential on targets
  std::size_t pivots = 0;

  /// max(u_i + v_j - c_ij, 0) over all pairs plus max |u_i + v_j - c_ij| on
  /// the support of the plan.
  double dual_violation(const CostMatrix& c, double support_tol = 0.0) const;
  /// primal value minus dual value.
  double duality_gap(const DensityField& mu, const DensityField& nu) const;
};

/// Exact Kantorovich solver: transportation simplex started from the
/// north-west corner basis. Entering cell by most negative reduced cost,
/// switching to Bland's lowest-index rule after a run of degenerate pivots.
/// Throws Error{marginal_mismatch} when total masses differ by more than 1e-9.
ExactTransport solve_exact(const CostMatrix& c, const DensityField& mu,
                           const DensityField& nu);

inline constexpr std::size_t kVertexEnumerationLimit = 5;

/// Reference solver: evaluates every basic feasible plan of the transport
/// polytope. Exponential cost; throws Error{invalid_argument} above
/// kVertexEnumerationLimit points. Potentials are left empty.
ExactTransport solve_vertex_enumeration(const CostMatrix& c,
                                        const DensityField& mu,
                                        const DensityField& nu);

struct EntropicOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

struct EntropicTransport {
  Coupling coupling;
  double value = 0.0;  // <c, gamma>, entropy term excluded
  bool converged = false;
  std::size_t iterations = 0;
  double marginal_violation = 0.0;
};

/// Log-domain Sinkhorn for min <c,gamma> + eps sum gamma (log gamma - 1),
/// finished by Newton on the semi-dual once sweeps stop making progress.
/// Never throws on nonconvergence; check `converged`.
EntropicTransport solve_entropic(const CostMatrix& c, const DensityField& mu,
                                 const DensityField& nu, double eps,
                                 const EntropicOptions& opts = {});

/// (int_0^1 |F_mu^{-1}(s) - F_nu^{-1}(s)|^r ds)^{1/r} for the atomic
/// measures sitting at cell centers.
double wasserstein_1d(double r, const DensityField& mu, const DensityField& nu,
                      const Grid& g);

/// Monotone (north-west corner) plan between the atomic measures. Optimal for
/// every cost that is a convex function of x - y.
Coupling monotone_coupling(const DensityField& mu, const DensityField& nu);

// --------------------------------------------------------------------------
// Transport between piecewise-constant densities.
//
// Here a DensityField is read as a density that is constant inside each cell
// (not as atoms at the centers). Quantile functions are then piecewise linear
// and the monotone pairing s -> (X_mu(s), X_nu(s)) is evaluated in closed
// form segment by segment. The cost uses the exponent of the cell holding the
// source point.
// --------------------------------------------------------------------------

struct ContinuousCost {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d nu-mass, one per target cell
};

/// Monotone-pairing cost int_0^1 c(X_mu(s), X_nu(s)) ds with
/// c(x, y) = |x - y|^{p(x)} / (h^{p(x)-1} p(x)). Exact W^h for constant p.
double continuous_transport_cost(const DensityField& mu,
                                 const DensityField& nu,
                                 const ExponentField& p, double h,
                                 const Grid& g);

/// Same value plus its gradient with respect to the target masses.
ContinuousCost continuous_transport_cost_with_gradient(
    const DensityField& mu, const DensityField& nu, const ExponentField& p,
    double h, const Grid& g);

/// Per-source-cell mean displacement (1/m_i) int (X_nu(s) - X_mu(s)) ds over
/// the quantile levels held by cell i; zero for empty cells.
CellField continuous_mean_displacement(const DensityField& mu,
                                       const DensityField& nu, const Grid& g);

/// McCann interpolant ((1-t) X_mu + t X_nu) pushed back onto the grid cells.
DensityField displacement_interpolation(const DensityField& mu,
                                        const DensityField& nu, double t,
                                        const Grid& g);

/// Continuous constant-exponent Wasserstein distance between the
/// piecewise-constant densities.
double wasserstein_continuous(double r, const DensityField& mu,
                              const DensityField& nu, const Grid& g);

}  // namespace varwass
