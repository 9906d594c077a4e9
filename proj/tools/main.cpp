#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "config.hpp"
#include "experiments.hpp"
#include "varwass/error.hpp"

namespace {

using namespace varwass::cli;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(kExitParse, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_for(varwass::ErrorCode code) {
  switch (code) {
    case varwass::ErrorCode::blow_up:
    case varwass::ErrorCode::vanishing_density:
    case varwass::ErrorCode::marginal_mismatch:
    case varwass::ErrorCode::shape_mismatch:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-exponent Wasserstein gradient flow experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool quiet = false;
  auto* seed_opt =
      app.add_option("--seed", seed, "override the config seed")->capture_default_str();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_flag("--quiet", quiet, "suppress progress messages");
  auto* run = app.add_subcommand("run", "run the experiment");
  auto* validate_cmd = app.add_subcommand("validate", "check the config only");
  auto* oracle =
      app.add_subcommand("oracle", "run with reference backends only");
  for (auto* sub : {run, validate_cmd, oracle}) {
    sub->add_option("config", path, "experiment config (JSON)")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    const std::string text = read_file(path);
    ExperimentConfig cfg = parse_config(text);
    if (seed_opt->count()) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    validate(cfg);
    if (validate_cmd->parsed()) {
      if (!quiet) std::cout << "config ok: " << cfg.kind << " experiment\n";
      return kExitOk;
    }
    RunContext ctx;
    ctx.out_dir = cfg.output;
    ctx.quiet = quiet;
    ctx.config_hash = fnv1a_hex(
        text + (cfg.seed ? "\nseed=" + std::to_string(*cfg.seed) : ""));
    return run_experiment(cfg, oracle->parsed() ? Mode::oracle : Mode::run,
                          ctx);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const varwass::Error& e) {
    std::cerr << "error [" << varwass::to_string(e.code()) << "]: " << e.what()
              << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
