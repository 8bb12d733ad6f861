#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rdm/config.hpp"

namespace rdm {

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;  // paths written, in write order
  nlohmann::json summary;          // summary or verify report document
};

// Runs the configured experiment and writes its files under the output
// directory (RDM_OUT_DIR overrides the configured one). Deterministic given
// (config, seed). Throws ConfigError for bad setups and other rdm::Error
// subtypes for runtime failures; a failing verify run returns exit_code 1
// with the report still written.
RunResult run_experiment(const ExperimentConfig& config);

// Exception-to-exit-code wrapper: 0 success, 1 divergence/property
// violation, 2 config error. Messages go to stderr.
int run_experiment_exit_code(const ExperimentConfig& config);

}  // namespace rdm
