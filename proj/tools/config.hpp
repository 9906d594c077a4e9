#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "varwass/energy.hpp"
#include "varwass/grid.hpp"
#include "varwass/jko.hpp"
#include "varwass/pde.hpp"
#include "varwass/varexp.hpp"

namespace varwass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

/// Carries the process exit code alongside the diagnostic.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int exit_code, const std::string& msg)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

struct ExponentSpec {
  std::string type = "constant";  // constant | piecewise | affine
  double value = 2.0;
  std::vector<double> breaks;  // piecewise: interior break points, increasing
  std::vector<double> values;  // piecewise: breaks.size() + 1 exponents
  double p0 = 2.0;             // affine: p(x) = p0 + p1 * x
  double p1 = 0.0;
};

struct DensitySpec {
  std::string type = "uniform";  // uniform | cosine | gaussian | mass
  double amplitude = 0.5;
  double center = 0.5;
  double width = 0.1;
  std::vector<double> mass;
};

struct SolverSpec {
  std::string model = "piecewise";
  std::string backend = "automatic";
  std::size_t max_iterations = 0;
  double rel_tol = 1e-9;
  double eps = 0.0;  // entropic eps; 0 means 1e-3 * median(c)
  double cfl = 0.4;
  double delta_reg = 1e-8;
  double output_dt = 0.0;
  double threshold = 5e-2;  // compare: pass bound on the final L1 error
  std::size_t samples = 100;
  std::size_t steps = 16;  // finsler: interpolation steps
};

struct ExperimentConfig {
  std::string kind;
  double a = 0.0;
  double b = 1.0;
  std::size_t n_cells = 0;
  ExponentSpec exponent;
  std::string energy = "entropy";
  double energy_m = 2.0;
  double h = 1e-3;
  double t_end = 0.0;
  DensitySpec initial;
  std::optional<DensitySpec> target;
  std::optional<double> max_density;
  SolverSpec solver;
  std::optional<std::uint64_t> seed;
  std::string output = ".";
};

/// Throws ConfigError with kExitParse on malformed JSON or wrong value types
/// and kExitValidation on missing or unknown keys.
ExperimentConfig parse_config(const std::string& text);

/// Semantic checks (assumptions on p, G and the density bound, solver
/// ranges). Throws ConfigError with kExitValidation.
void validate(const ExperimentConfig& cfg);

Grid build_grid(const ExperimentConfig& cfg);
ExponentField build_exponent(const ExponentSpec& spec, const Grid& g);
DensityField build_density(const DensitySpec& spec, const Grid& g);
EnergyModel build_energy(const ExperimentConfig& cfg);
JkoOptions build_jko_options(const SolverSpec& s);
pde::PdeConfig build_pde_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace varwass::cli
