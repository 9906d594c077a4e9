#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <json.hpp>

#include "varwass/error.hpp"

namespace varwass::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKinds = {"norms", "transport", "jko",
                                      "pde",   "compare",   "finsler"};

[[noreturn]] void invalid(const std::string& msg) {
  throw ConfigError(kExitValidation, msg);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(kExitParse, where + " must be an object");
  }
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      invalid("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ExponentSpec parse_exponent(const json& j) {
  reject_unknown(j, {"type", "value", "breaks", "values", "p0", "p1"},
                 "exponent");
  ExponentSpec s;
  read(j, "type", s.type);
  read(j, "value", s.value);
  read(j, "breaks", s.breaks);
  read(j, "values", s.values);
  read(j, "p0", s.p0);
  read(j, "p1", s.p1);
  return s;
}

DensitySpec parse_density(const json& j, const std::string& where) {
  reject_unknown(j, {"type", "amplitude", "center", "width", "mass"}, where);
  DensitySpec s;
  read(j, "type", s.type);
  read(j, "amplitude", s.amplitude);
  read(j, "center", s.center);
  read(j, "width", s.width);
  read(j, "mass", s.mass);
  return s;
}

SolverSpec parse_solver(const json& j) {
  reject_unknown(j,
                 {"model", "backend", "max_iterations", "rel_tol", "eps", "cfl",
                  "delta_reg", "output_dt", "threshold", "samples", "steps"},
                 "solver");
  SolverSpec s;
  read(j, "model", s.model);
  read(j, "backend", s.backend);
  read(j, "max_iterations", s.max_iterations);
  read(j, "rel_tol", s.rel_tol);
  read(j, "eps", s.eps);
  read(j, "cfl", s.cfl);
  read(j, "delta_reg", s.delta_reg);
  read(j, "output_dt", s.output_dt);
  read(j, "threshold", s.threshold);
  read(j, "samples", s.samples);
  read(j, "steps", s.steps);
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void validate_density(const DensitySpec& s, std::size_t n,
                      const std::string& where) {
  if (s.type == "uniform") return;
  if (s.type == "cosine") {
    if (!(std::abs(s.amplitude) < 1.0)) {
      invalid(where + ": cosine amplitude must lie in (-1, 1)");
    }
  } else if (s.type == "gaussian") {
    if (!(s.width > 0.0) || !std::isfinite(s.center)) {
      invalid(where + ": gaussian needs a finite center and width > 0");
    }
  } else if (s.type == "mass") {
    if (s.mass.size() != n) {
      invalid(where + ": mass list has " + std::to_string(s.mass.size()) +
              " entries, grid has " + std::to_string(n));
    }
    double total = 0.0;
    for (double m : s.mass) {
      if (!(m >= 0.0) || !std::isfinite(m)) {
        invalid(where + ": masses must be finite and nonnegative");
      }
      total += m;
    }
    if (!(total > 0.0)) invalid(where + ": masses sum to zero");
  } else {
    invalid(where + ": unknown density type '" + s.type + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(kExitParse, std::string("config is not valid JSON: ") +
                                      e.what());
  }
  try {
    reject_unknown(j,
                   {"experiment", "grid", "exponent", "energy", "h", "t_end",
                    "initial", "target", "max_density", "solver", "seed",
                    "output"},
                   "config");
    ExperimentConfig cfg;
    if (!j.contains("experiment")) invalid("missing key 'experiment'");
    cfg.kind = j.at("experiment").get<std::string>();
    if (!j.contains("grid")) invalid("missing key 'grid'");
    const json& grid = j.at("grid");
    reject_unknown(grid, {"a", "b", "n_cells"}, "grid");
    if (!grid.contains("n_cells")) invalid("missing key 'grid.n_cells'");
    read(grid, "a", cfg.a);
    read(grid, "b", cfg.b);
    const auto n = grid.at("n_cells").get<std::int64_t>();
    if (n < 2) invalid("grid.n_cells must be at least 2");
    cfg.n_cells = static_cast<std::size_t>(n);
    if (j.contains("exponent")) cfg.exponent = parse_exponent(j.at("exponent"));
    if (j.contains("energy")) {
      const json& e = j.at("energy");
      reject_unknown(e, {"kind", "m"}, "energy");
      read(e, "kind", cfg.energy);
      read(e, "m", cfg.energy_m);
    }
    read(j, "h", cfg.h);
    read(j, "t_end", cfg.t_end);
    if (j.contains("initial")) {
      cfg.initial = parse_density(j.at("initial"), "initial");
    }
    if (j.contains("target")) {
      cfg.target = parse_density(j.at("target"), "target");
    }
    if (j.contains("max_density")) {
      cfg.max_density = j.at("max_density").get<double>();
    }
    if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    read(j, "output", cfg.output);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(kExitParse, std::string("config has a malformed value: ") +
                                      e.what());
  }
}

void validate(const ExperimentConfig& cfg) {
  if (!kKinds.count(cfg.kind)) {
    invalid("unknown experiment kind '" + cfg.kind + "'");
  }
  if (!(cfg.a < cfg.b) || !std::isfinite(cfg.a) || !std::isfinite(cfg.b)) {
    invalid("grid needs finite a < b");
  }
  const Grid g = build_grid(cfg);

  const ExponentSpec& e = cfg.exponent;
  if (e.type == "piecewise") {
    if (e.values.size() != e.breaks.size() + 1) {
      invalid("piecewise exponent needs one more value than breaks");
    }
    for (std::size_t k = 1; k < e.breaks.size(); ++k) {
      if (!(e.breaks[k - 1] < e.breaks[k])) {
        invalid("piecewise exponent breaks must increase");
      }
    }
  } else if (e.type != "constant" && e.type != "affine") {
    invalid("unknown exponent type '" + e.type + "'");
  }
  double p_minus = std::numeric_limits<double>::infinity();
  double p_plus = -p_minus;
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    double p = e.value;
    if (e.type == "affine") {
      p = e.p0 + e.p1 * g.center(i);
    } else if (e.type == "piecewise") {
      std::size_t k = 0;
      while (k < e.breaks.size() && g.center(i) >= e.breaks[k]) ++k;
      p = e.values[k];
    }
    if (std::isnan(p)) invalid("assumption A1 violated: exponent is NaN");
    p_minus = std::min(p_minus, p);
    p_plus = std::max(p_plus, p);
  }
  if (!(p_minus > 1.0)) {
    invalid("assumption A1 violated: p_minus = " + fmt(p_minus) +
            " must exceed 1");
  }
  if (!std::isfinite(p_plus)) {
    invalid("assumption A1 violated: p_plus must be finite");
  }

  try {
    const EnergyKind kind = parse_energy_kind(cfg.energy);
    if (kind == EnergyKind::power && !(cfg.energy_m > 1.0)) {
      invalid("assumption A2 violated: power energy needs m > 1, got " +
              fmt(cfg.energy_m));
    }
  } catch (const Error& err) {
    invalid(err.what());
  }

  const bool needs_h = cfg.kind == "jko" || cfg.kind == "compare" ||
                       cfg.kind == "transport";
  if (needs_h && !(cfg.h > 0.0 && std::isfinite(cfg.h))) {
    invalid("h must be positive");
  }
  if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
    invalid("t_end must be finite and nonnegative");
  }
  if (cfg.kind == "compare") {
    const double steps = cfg.t_end / cfg.h;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
      invalid("compare needs t_end to be a multiple of h");
    }
  }

  validate_density(cfg.initial, g.n_cells(), "initial");
  if (cfg.target) validate_density(*cfg.target, g.n_cells(), "target");
  if ((cfg.kind == "transport" || cfg.kind == "finsler") && !cfg.target) {
    invalid(cfg.kind + " experiment needs a 'target' density");
  }
  if (cfg.max_density) {
    const double m2 = *cfg.max_density;
    if (!(m2 > 0.0)) invalid("max_density must be positive");
    const double init_max = build_density(cfg.initial, g).max_density(g);
    if (init_max > m2) {
      invalid("assumption A3 violated: initial max density " + fmt(init_max) +
              " exceeds max_density " + fmt(m2));
    }
  }

  const SolverSpec& s = cfg.solver;
  if (s.model != "piecewise" && s.model != "atomic") {
    invalid("solver.model must be 'piecewise' or 'atomic'");
  }
  const std::set<std::string> backends = {"automatic", "newton",
                                          "mirror_descent",
                                          "projected_gradient"};
  if (!backends.count(s.backend)) {
    invalid("unknown solver.backend '" + s.backend + "'");
  }
  if (s.backend != "automatic" &&
      (s.backend == "newton") != (s.model == "piecewise")) {
    invalid("solver.backend '" + s.backend + "' does not fit model '" +
            s.model + "'");
  }
  if (!(s.rel_tol > 0.0)) invalid("solver.rel_tol must be positive");
  if (!(s.eps >= 0.0)) invalid("solver.eps must be nonnegative");
  if (!(s.cfl > 0.0 && s.cfl <= 1.0)) invalid("solver.cfl must lie in (0, 1]");
  if (!(s.delta_reg >= 0.0)) invalid("solver.delta_reg must be nonnegative");
  if (!(s.output_dt >= 0.0)) invalid("solver.output_dt must be nonnegative");
  if (!(s.threshold > 0.0)) invalid("solver.threshold must be positive");
  if (s.samples == 0) invalid("solver.samples must be positive");
  if (s.steps == 0) invalid("solver.steps must be positive");

  if (cfg.kind == "norms" && !cfg.seed) {
    invalid("norms experiment samples random fields and needs a seed");
  }
}

Grid build_grid(const ExperimentConfig& cfg) {
  return make_grid(cfg.a, cfg.b, cfg.n_cells);
}

ExponentField build_exponent(const ExponentSpec& spec, const Grid& g) {
  CellField p(g.n_cells(), spec.value);
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    if (spec.type == "affine") {
      p[i] = spec.p0 + spec.p1 * g.center(i);
    } else if (spec.type == "piecewise") {
      std::size_t k = 0;
      while (k < spec.breaks.size() && g.center(i) >= spec.breaks[k]) ++k;
      p[i] = spec.values[k];
    }
  }
  return ExponentField(std::move(p));
}

DensityField build_density(const DensitySpec& spec, const Grid& g) {
  const std::size_t n = g.n_cells();
  if (spec.type == "mass") {
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = spec.mass[i] / g.dx();
    return DensityField::from_density(rho, g);
  }
  std::vector<double> rho(n, 1.0);
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.center(i);
    if (spec.type == "cosine") {
      rho[i] = 1.0 + spec.amplitude * std::cos(pi * (x - g.a()) / g.length());
    } else if (spec.type == "gaussian") {
      const double z = (x - spec.center) / spec.width;
      rho[i] = std::exp(-0.5 * z * z);
    }
  }
  return DensityField::from_density(rho, g);
}

EnergyModel build_energy(const ExperimentConfig& cfg) {
  return builtin_energy(parse_energy_kind(cfg.energy), cfg.energy_m);
}

JkoOptions build_jko_options(const SolverSpec& s) {
  JkoOptions o;
  o.model = s.model == "atomic" ? TransportModel::atomic
                                : TransportModel::piecewise;
  if (s.backend == "newton") o.backend = JkoBackend::newton;
  if (s.backend == "mirror_descent") o.backend = JkoBackend::mirror_descent;
  if (s.backend == "projected_gradient") {
    o.backend = JkoBackend::projected_gradient;
  }
  o.max_iterations = s.max_iterations;
  o.rel_tol = s.rel_tol;
  return o;
}

pde::PdeConfig build_pde_config(const ExperimentConfig& cfg) {
  pde::PdeConfig p;
  p.cfl = cfg.solver.cfl;
  p.delta_reg = cfg.solver.delta_reg;
  p.t_end = cfg.t_end;
  p.output_dt = cfg.solver.output_dt;
  return p;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace varwass::cli
