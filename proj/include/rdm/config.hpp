#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rdm/errors.hpp"

namespace rdm {

// One JSON document drives a run; individual keys can be overridden on the
// command line with --set key=value. Unknown keys are rejected and every
// field is validated before any computation.
struct ExperimentConfig {
  std::string kind = "dynamics";  // dynamics|filters|symsimsiam|align|verify

  // Data model.
  std::int64_t d = 32;
  std::int64_t k = 16;
  double aug_std = 0.5;
  std::uint64_t seed = 0;
  std::string population;  // optional path to a finite-population JSON file
  std::int64_t samples = 2048;  // batch rows drawn for sampled experiments

  // Filter.
  std::string filter = "directpred";

  // Dynamics.
  double alpha = 0.1;
  double eta = 0.01;
  std::int64_t steps = 500;
  bool stop_gradient = true;
  std::string predictor_mode = "refit";
  double momentum = 0.9;  // EMA momentum of the centering loop

  // Output.
  std::string out_dir = "out";
  std::int64_t record_stride = 1;
  std::int64_t top_eigenvalues = 8;

  // Property suite.
  std::int64_t instances = 1000;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError on unknown keys, bad types, or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

// "key=value" override with the same validation as the JSON path.
void apply_override(ExperimentConfig& config, const std::string& assignment);

void validate_config(const ExperimentConfig& config);

// Echo that round-trips: config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace rdm
