#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdm {

struct PropertyResult {
  std::string name;
  std::int64_t instances = 0;
  std::int64_t failures = 0;
  double worst_margin = 0.0;  // smallest pass distance observed; < 0 failed
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  std::uint64_t seed = 0;

  bool pass() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::int64_t instances = 1000;
  // Run only the named properties (empty means all).
  std::vector<std::string> only;
  // Test hook: feeds a non-monotone map into the strict rank-reduction
  // property, which must then report failures.
  bool inject_nonmonotone_filter = false;
};

// Runs every analytic property of the library across randomized instances.
// Instances fan out across threads; each draws from its own child stream and
// results merge by instance index, so the report is deterministic.
VerifyReport verify_all(const VerifyOptions& options);

}  // namespace rdm
