#include "varwass/jko.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varwass/error.hpp"

namespace varwass {

namespace {

double energy_of_masses(const std::vector<double>& m, const EnergyModel& e,
                        double dx) {
  double s = 0.0;
  for (double v : m) s += e.eval(v / dx);
  return s * dx;
}

std::vector<double> renormalized(std::vector<double> m) {
  double total = 0.0;
  for (double& v : m) {
    v = std::max(v, 0.0);
    total += v;
  }
  for (double& v : m) v /= total;
  return m;
}

DensityField as_density(std::vector<double> m) {
  return DensityField(CellField(renormalized(std::move(m))));
}

void check_inputs(const DensityField& rho, const ExponentField& p, double h,
                  const Grid& g) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::nonpositive_h, "time step h must be positive");
  }
  if (rho.size() != g.n_cells() || p.size() != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch, "field sizes do not match the grid");
  }
}

// ---------------------------------------------------------------------------
// Piecewise-constant model. Unknowns are the target masses nu; moves are
// parametrized by face transfers so the total mass never changes: direction
// f (1 <= f < n) adds to cell f-1 and removes from cell f.
// ---------------------------------------------------------------------------

class PiecewiseStep {
 public:
  PiecewiseStep(const DensityField& mu, const EnergyModel& e,
                const ExponentField& p, double h, const Grid& g)
      : mu_(mu), e_(e), p_(p), h_(h), g_(g), n_(g.n_cells()) {}

  double objective(const std::vector<double>& nu) const {
    return energy_of_masses(nu, e_, g_.dx()) +
           continuous_transport_cost(mu_, DensityField(CellField(nu)), p_, h_,
                                     g_);
  }

  // Transport part of the gradient with respect to nu.
  std::vector<double> transport_gradient(const std::vector<double>& nu) const {
    return continuous_transport_cost_with_gradient(
               mu_, DensityField(CellField(nu)), p_, h_, g_)
        .gradient;
  }

  // Reduced gradient in face-transfer coordinates.
  static Eigen::VectorXd reduce(const std::vector<double>& full) {
    const std::size_t n = full.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(n - 1));
    for (std::size_t f = 1; f < n; ++f) {
      r(static_cast<Eigen::Index>(f - 1)) = full[f - 1] - full[f];
    }
    return r;
  }

  std::vector<double> full_gradient(const std::vector<double>& nu) const {
    std::vector<double> gr = transport_gradient(nu);
    for (std::size_t j = 0; j < n_; ++j) gr[j] += e_.deriv(nu[j] / g_.dx());
    return gr;
  }

  Eigen::MatrixXd reduced_hessian(const std::vector<double>& nu) const {
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
    // Energy part: P^T diag(G''(rho)/dx) P is tridiagonal.
    std::vector<double> d(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      d[j] = e_.second(nu[j] / g_.dx()) / g_.dx();
    }
    for (Eigen::Index f = 0; f < m; ++f) {
      const auto k = static_cast<std::size_t>(f);
      hess(f, f) += d[k] + d[k + 1];
      if (f + 1 < m) {
        hess(f, f + 1) -= d[k + 1];
        hess(f + 1, f) -= d[k + 1];
      }
    }
    // Transport part by central differences of the exact gradient.
    std::vector<double> plus = nu;
    std::vector<double> minus = nu;
    for (std::size_t f = 1; f < n_; ++f) {
      const double room = std::min(nu[f - 1], nu[f]);
      const double delta = std::max(1e-7 * room, 1e-300);
      if (room <= 0.0) continue;
      plus[f - 1] += delta;
      plus[f] -= delta;
      minus[f - 1] -= delta;
      minus[f] += delta;
      const Eigen::VectorXd gp = reduce(transport_gradient(plus));
      const Eigen::VectorXd gm = reduce(transport_gradient(minus));
      hess.col(static_cast<Eigen::Index>(f - 1)) += (gp - gm) / (2.0 * delta);
      plus[f - 1] = minus[f - 1] = nu[f - 1];
      plus[f] = minus[f] = nu[f];
    }
    return 0.5 * (hess + hess.transpose());
  }

  static std::vector<double> expand(const Eigen::VectorXd& z) {
    const std::size_t n = static_cast<std::size_t>(z.size()) + 1;
    std::vector<double> out(n, 0.0);
    for (std::size_t f = 1; f < n; ++f) {
      const double v = z(static_cast<Eigen::Index>(f - 1));
      out[f - 1] += v;
      out[f] -= v;
    }
    return out;
  }

 private:
  const DensityField& mu_;
  const EnergyModel& e_;
  const ExponentField& p_;
  double h_;
  const Grid& g_;
  std::size_t n_;
};

struct SolverOutcome {
  std::vector<double> nu;
  std::size_t iterations = 0;
  bool converged = false;
};

SolverOutcome solve_piecewise(const DensityField& mu, const EnergyModel& e,
                              const ExponentField& p, double h, const Grid& g,
                              const JkoOptions& opts) {
  const PiecewiseStep step(mu, e, p, h, g);
  const std::size_t max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 200;
  SolverOutcome out;
  out.nu = mu.mass().values;
  double f = step.objective(out.nu);
  double last_change = std::numeric_limits<double>::infinity();
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const Eigen::VectorXd grad = PiecewiseStep::reduce(step.full_gradient(out.nu));
    Eigen::MatrixXd hess = step.reduced_hessian(out.nu);
    Eigen::VectorXd dz;
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    double shift = 0.0;
    const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1.0);
    while (llt.info() != Eigen::Success) {
      shift = shift == 0.0 ? 1e-10 * scale : shift * 10.0;
      llt.compute(hess + shift * Eigen::MatrixXd::Identity(hess.rows(), hess.cols()));
    }
    dz = llt.solve(-grad);
    double slope = grad.dot(dz);
    if (!(slope < 0.0)) {
      dz = -grad;
      slope = -grad.squaredNorm();
    }
    // -slope is the squared Newton decrement, twice the predicted decrease.
    const double predicted = -0.5 * slope / std::max(1.0, std::abs(f));
    if (predicted <= 1e-14) {
      out.converged = true;
      break;
    }
    const std::vector<double> dnu = PiecewiseStep::expand(dz);
    double alpha = 1.0;
    for (std::size_t j = 0; j < dnu.size(); ++j) {
      if (dnu[j] < 0.0) alpha = std::min(alpha, -0.95 * out.nu[j] / dnu[j]);
    }
    bool accepted = false;
    std::vector<double> trial(out.nu.size());
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      for (std::size_t j = 0; j < trial.size(); ++j) {
        trial[j] = std::max(out.nu[j] + alpha * dnu[j], 0.0);
      }
      trial = renormalized(std::move(trial));
      f_trial = step.objective(trial);
      if (f_trial <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable decrease left along the Newton direction.
      out.converged = predicted <= opts.rel_tol;
      break;
    }
    last_change = std::abs(f - f_trial) / std::max(1.0, std::abs(f));
    out.nu = trial;
    f = f_trial;
    if (last_change <= 1e-15) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && last_change <= opts.rel_tol) out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// Atomic model: joint program over the plan with fixed row marginals.
// ---------------------------------------------------------------------------

class AtomicProgram {
 public:
  AtomicProgram(const CostMatrix& c, const DensityField& mu,
                const EnergyModel& e, const Grid& g)
      : c_(c), mu_(mu), e_(e), dx_(g.dx()), n_(c.size()) {}

  std::vector<double> columns(const std::vector<double>& gamma) const {
    std::vector<double> col(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) col[j] += gamma[i * n_ + j];
    }
    return col;
  }

  double objective(const std::vector<double>& gamma) const {
    double lin = 0.0;
    for (std::size_t k = 0; k < gamma.size(); ++k) lin += c_.entries()[k] * gamma[k];
    return lin + energy_of_masses(columns(gamma), e_, dx_);
  }

  std::vector<double> gradient(const std::vector<double>& gamma) const {
    const std::vector<double> col = columns(gamma);
    std::vector<double> gr(n_ * n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double gj = e_.deriv(col[j] / dx_);
      for (std::size_t i = 0; i < n_; ++i) gr[i * n_ + j] = c_(i, j) + gj;
    }
    return gr;
  }

  // sum_i m_i (mean_j gamma-weighted gradient - min_j gradient) >= f - f*.
  double frank_wolfe_gap(const std::vector<double>& gamma,
                         const std::vector<double>& gr) const {
    double gap = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double dot = 0.0;
      double mn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n_; ++j) {
        dot += gamma[i * n_ + j] * gr[i * n_ + j];
        mn = std::min(mn, gr[i * n_ + j]);
      }
      gap += dot - mu_.mass(i) * mn;
    }
    return gap;
  }

  std::vector<double> uniform_rows() const {
    std::vector<double> gamma(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        gamma[i * n_ + j] = mu_.mass(i) / static_cast<double>(n_);
      }
    }
    return gamma;
  }

  std::size_t n() const { return n_; }
  double row_mass(std::size_t i) const { return mu_.mass(i); }

 private:
  const CostMatrix& c_;
  const DensityField& mu_;
  const EnergyModel& e_;
  double dx_;
  std::size_t n_;
};

struct AtomicOutcome {
  std::vector<double> gamma;
  std::size_t iterations = 0;
  bool converged = false;
};

// Stops after `patience` consecutive accepted steps with relative objective
// change below rel_tol, or when the Frank-Wolfe gap certifies rel_tol.
class StopRule {
 public:
  explicit StopRule(double rel_tol) : rel_tol_(rel_tol) {}

  bool update(double f_old, double f_new, double gap) {
    const double scale = std::max(1.0, std::abs(f_new));
    if (gap <= rel_tol_ * 1e-3 * scale) return true;
    if (std::abs(f_old - f_new) <= rel_tol_ * scale) {
      ++quiet_;
    } else {
      quiet_ = 0;
    }
    return quiet_ >= kPatience;
  }

 private:
  static constexpr int kPatience = 50;
  double rel_tol_;
  int quiet_ = 0;
};

AtomicOutcome mirror_descent(const AtomicProgram& prog, std::size_t max_iter,
                             double rel_tol) {
  const std::size_t n = prog.n();
  AtomicOutcome out;
  out.gamma = prog.uniform_rows();
  double f = prog.objective(out.gamma);
  double tau = 1.0;
  StopRule stop(rel_tol);
  std::vector<double> trial(n * n);
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const std::vector<double> gr = prog.gradient(out.gamma);
    const double gap = prog.frank_wolfe_gap(out.gamma, gr);
    bool accepted = false;
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls) {
      double lin = 0.0;
      double kl = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double m = prog.row_mass(i);
        if (m == 0.0) {
          for (std::size_t j = 0; j < n; ++j) trial[i * n + j] = 0.0;
          continue;
        }
        double mn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (out.gamma[i * n + j] > 0.0) mn = std::min(mn, gr[i * n + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double g0 = out.gamma[i * n + j];
          const double v = g0 > 0.0 ? g0 * std::exp(-tau * (gr[i * n + j] - mn)) : 0.0;
          trial[i * n + j] = v;
          z += v;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = i * n + j;
          trial[k] *= m / z;
          lin += gr[k] * (trial[k] - out.gamma[k]);
          if (trial[k] > 0.0) kl += trial[k] * std::log(trial[k] / out.gamma[k]);
        }
      }
      f_trial = prog.objective(trial);
      if (f_trial <= f + lin + kl / tau + 1e-15 * std::abs(f) && f_trial <= f) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      out.converged = gap <= 1e-6 * std::max(1.0, std::abs(f));
      break;
    }
    out.gamma.swap(trial);
    const double f_old = f;
    f = f_trial;
    tau *= 1.5;
    if (stop.update(f_old, f, gap)) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }
  return out;
}

// Euclidean projection of v onto {x >= 0, sum x = mass}.
void project_scaled_simplex(double* v, std::size_t n, double mass,
                            std::vector<double>& scratch) {
  if (mass == 0.0) {
    std::fill(v, v + n, 0.0);
    return;
  }
  scratch.assign(v, v + n);
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cumsum += scratch[k];
    const double t = (cumsum - mass) / static_cast<double>(k + 1);
    if (scratch[k] - t > 0.0) theta = t;
  }
  for (std::size_t k = 0; k < n; ++k) v[k] = std::max(v[k] - theta, 0.0);
}

AtomicOutcome projected_gradient(const AtomicProgram& prog,
                                 std::size_t max_iter, double rel_tol) {
  const std::size_t n = prog.n();
  AtomicOutcome out;
  out.gamma = prog.uniform_rows();
  double f = prog.objective(out.gamma);
  double tau = 1e-3;
  StopRule stop(rel_tol);
  std::vector<double> trial(n * n);
  std::vector<double> scratch;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const std::vector<double> gr = prog.gradient(out.gamma);
    const double gap = prog.frank_wolfe_gap(out.gamma, gr);
    bool accepted = false;
    double f_trial = f;
    for (int ls = 0; ls < 80; ++ls) {
      for (std::size_t k = 0; k < n * n; ++k) trial[k] = out.gamma[k] - tau * gr[k];
      for (std::size_t i = 0; i < n; ++i) {
        project_scaled_simplex(&trial[i * n], n, prog.row_mass(i), scratch);
      }
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t k = 0; k < n * n; ++k) {
        const double d = trial[k] - out.gamma[k];
        lin += gr[k] * d;
        sq += d * d;
      }
      f_trial = prog.objective(trial);
      if (f_trial <= f + lin + sq / (2.0 * tau) + 1e-15 * std::abs(f) &&
          f_trial <= f) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      out.converged = gap <= 1e-6 * std::max(1.0, std::abs(f));
      break;
    }
    out.gamma.swap(trial);
    const double f_old = f;
    f = f_trial;
    tau *= 1.5;
    if (stop.update(f_old, f, gap)) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }
  return out;
}

JkoBackend resolve_backend(const JkoOptions& opts) {
  if (opts.backend != JkoBackend::automatic) return opts.backend;
  return opts.model == TransportModel::piecewise ? JkoBackend::newton
                                                 : JkoBackend::mirror_descent;
}

}  // namespace

JkoStepResult jko_step(const DensityField& rho_prev, const EnergyModel& e,
                       const ExponentField& p, double h, const Grid& g,
                       const JkoOptions& opts) {
  check_inputs(rho_prev, p, h, g);
  const JkoBackend backend = resolve_backend(opts);
  JkoStepResult res{rho_prev, Coupling{}, false, 0.0, 0.0, 0.0, 0.0, 0, false};
  res.energy_before = total_energy(rho_prev, e, g);

  if (opts.model == TransportModel::piecewise) {
    if (backend != JkoBackend::newton) {
      throw Error(ErrorCode::invalid_argument,
                  "the piecewise transport model is solved by the newton backend");
    }
    SolverOutcome sol = solve_piecewise(rho_prev, e, p, h, g, opts);
    res.rho_next = as_density(std::move(sol.nu));
    res.iterations = sol.iterations;
    res.converged = sol.converged;
    res.coupling = monotone_coupling(rho_prev, res.rho_next);
    res.coupling_is_exact = true;
    res.transport_cost = continuous_transport_cost(rho_prev, res.rho_next, p, h, g);
  } else {
    if (backend == JkoBackend::newton) {
      throw Error(ErrorCode::invalid_argument,
                  "the atomic transport model needs mirror_descent or "
                  "projected_gradient");
    }
    const CostMatrix c = build_cost(g, p, h);
    const AtomicProgram prog(c, rho_prev, e, g);
    const std::size_t max_iter =
        opts.max_iterations > 0 ? opts.max_iterations : 200000;
    AtomicOutcome sol = backend == JkoBackend::mirror_descent
                            ? mirror_descent(prog, max_iter, opts.rel_tol)
                            : projected_gradient(prog, max_iter, opts.rel_tol);
    res.rho_next = as_density(prog.columns(sol.gamma));
    res.iterations = sol.iterations;
    res.converged = sol.converged;
    if (opts.exact_coupling) {
      ExactTransport ex = solve_exact(c, rho_prev, res.rho_next);
      res.coupling = std::move(ex.coupling);
      res.coupling_is_exact = true;
      res.transport_cost = ex.value;
    } else {
      res.coupling = Coupling(g.n_cells());
      res.coupling.gamma = std::move(sol.gamma);
      res.coupling.row_marginal = rho_prev.mass();
      res.coupling.col_marginal = res.rho_next.mass();
      res.transport_cost = res.coupling.cost(c);
    }
  }
  res.energy_after = total_energy(res.rho_next, e, g);
  res.el_residual = el_residual(res, e, p, h, g).value;
  return res;
}

double step_objective(const DensityField& rho_prev, const DensityField& rho,
                      const EnergyModel& e, const ExponentField& p, double h,
                      const Grid& g, TransportModel model) {
  check_inputs(rho_prev, p, h, g);
  const double energy = total_energy(rho, e, g);
  if (model == TransportModel::piecewise) {
    return energy + continuous_transport_cost(rho_prev, rho, p, h, g);
  }
  return energy + solve_exact(build_cost(g, p, h), rho_prev, rho).value;
}

Trajectory run_flow(const DensityField& rho0, const EnergyModel& e,
                    const ExponentField& p, double h, double t_end,
                    const Grid& g, const JkoOptions& opts) {
  check_inputs(rho0, p, h, g);
  if (!(t_end >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "t_end must be nonnegative");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  for (std::size_t k = 1; k <= steps; ++k) {
    try {
      JkoStepResult step = jko_step(traj.states.back(), e, p, h, g, opts);
      traj.states.push_back(step.rho_next);
      traj.times.push_back(static_cast<double>(k) * h);
      traj.steps.push_back(std::move(step));
    } catch (const Error& err) {
      throw Error(err.code(),
                  "step " + std::to_string(k) + ": " + std::string(err.what()));
    }
  }
  return traj;
}

ElResidual el_residual(const JkoStepResult& step, const EnergyModel& e,
                       const ExponentField& p, double h, const Grid& g) {
  const std::size_t n = g.n_cells();
  if (step.coupling.n != n || step.rho_next.size() != n) {
    throw Error(ErrorCode::size_mismatch, "step does not match the grid");
  }
  const ExponentField q = conjugate(p);
  const FaceField s = gradient(energy_derivative(step.rho_next, e, g), g);
  const CellField s_cell = cell_average(s, g);
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = step.coupling.row_marginal[i];
    if (m <= 0.0) continue;
    double moved = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      moved += step.coupling(i, j) * (g.center(j) - g.center(i));
    }
    const double d = moved / m;
    const double sc = s_cell[i];
    const double v = sc == 0.0 ? 0.0 : std::pow(std::abs(sc), q[i] - 2.0) * sc;
    residual += m * std::abs(d + h * v);
  }
  return {residual, step.coupling_is_exact};
}

double dissipation_functional(const DensityField& rho, const EnergyModel& e,
                              const ExponentField& p, const Grid& g) {
  const ExponentField q = conjugate(p);
  const FaceField s = gradient(energy_derivative(rho, e, g), g);
  const std::size_t n = g.n_cells();
  double total = 0.0;
  for (std::size_t f = 1; f < n; ++f) {
    const double qf = 0.5 * (q[f - 1] + q[f]);
    const double pf = qf / (qf - 1.0);
    const double rf = 0.5 * (rho.density(f - 1, g) + rho.density(f, g));
    if (s[f] != 0.0) total += std::pow(std::abs(s[f]), qf) / pf * rf;
  }
  return total * g.dx();
}

DissipationReport dissipation_check(const Trajectory& traj,
                                    const EnergyModel& e,
                                    const ExponentField& p, double h,
                                    const Grid& g) {
  if (traj.states.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty trajectory");
  }
  DissipationReport rep;
  double prev = total_energy(traj.states.front(), e, g);
  rep.cumulative_lhs = prev - jensen_lower_bound(e, g);
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double cur = total_energy(traj.states[k], e, g);
    const double rate = h * dissipation_functional(traj.states[k], e, p, g);
    const double slack = prev - cur - rate;
    rep.step_slack.push_back(slack);
    rep.cumulative_rhs += rate;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    prev = cur;
  }
  rep.cumulative_slack = rep.cumulative_lhs - rep.cumulative_rhs;
  rep.worst_slack = std::min(rep.worst_slack, rep.cumulative_slack);
  return rep;
}

}  // namespace varwass
