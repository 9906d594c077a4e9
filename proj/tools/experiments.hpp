#pragma once

#include <string>

#include "config.hpp"

namespace varwass::cli {

enum class Mode { run, oracle };

struct RunContext {
  std::string out_dir;
  std::string config_hash;
  bool quiet = false;
};

/// Runs one experiment and writes its CSV files. Returns the exit code;
/// library errors propagate as varwass::Error.
int run_experiment(const ExperimentConfig& cfg, Mode mode,
                   const RunContext& ctx);

}  // namespace varwass::cli
